//! JSON file formats for instances, solver results and study reports, and
//! the flat record used for CSV export.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use drni_core::bnb::{SolverResult, SolverStats};
use drni_core::baseline::DeterministicResult;
use drni_core::experiments::{ExperimentReport, FactorModel, GammaSummary, InstanceRecord};
use drni_core::graph::{InterdictionPlan, Network, ScenarioSet};
use drni_core::risk::{BudgetedAmbiguitySet, RandomizedStrategy, RiskSpec};
use drni_core::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<[usize; 2]>,
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        Self {
            nodes: net.node_count(),
            source: net.source(),
            sink: net.sink(),
            arcs: net.arcs().iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl NetworkFile {
    pub fn to_network(&self) -> Result<Network> {
        Ok(Network::new(
            self.nodes,
            self.source,
            self.sink,
            self.arcs.iter().map(|a| (a[0], a[1])).collect(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModelFile {
    /// One row per arc, one column per factor.
    pub loadings: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

impl From<&FactorModel> for FactorModelFile {
    fn from(fm: &FactorModel) -> Self {
        Self {
            loadings: fm.loadings().to_vec(),
            mu: fm.mu().to_vec(),
        }
    }
}

impl FactorModelFile {
    pub fn to_model(&self) -> Result<FactorModel> {
        Ok(FactorModel::new(self.loadings.clone(), self.mu.clone())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSeeds {
    pub network: u64,
    pub factor: u64,
    pub sample: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub network: NetworkFile,
    /// One capacity vector per scenario.
    pub scenarios: Vec<Vec<f64>>,
    pub q_hat: Vec<f64>,
    pub q_bar: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_model: Option<FactorModelFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<GenerationSeeds>,
}

/// Command-line values that replace fields of an instance file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub budget: Option<usize>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            network: NetworkFile::from(&inst.net),
            scenarios: inst.scenarios.iter().map(|c| c.as_slice().to_vec()).collect(),
            q_hat: inst.amb.q_hat().to_vec(),
            q_bar: inst.amb.q_bar().to_vec(),
            gamma: inst.amb.gamma(),
            alpha: inst.risk.alpha(),
            budget: inst.budget,
            factor_model: None,
            seeds: None,
        }
    }

    pub fn to_instance(&self, o: Overrides) -> Result<Instance> {
        let net = self.network.to_network().context("network")?;
        let scenarios = ScenarioSet::new(net.num_arcs(), self.scenarios.clone()).context("scenarios")?;
        let amb = BudgetedAmbiguitySet::new(self.q_hat.clone(), self.q_bar.clone(), o.gamma.unwrap_or(self.gamma))
            .context("ambiguity set")?;
        let risk = RiskSpec::new(o.alpha.unwrap_or(self.alpha))?;
        Ok(Instance::new(net, scenarios, amb, risk, o.budget.unwrap_or(self.budget))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub arcs: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub nodes_evaluated: usize,
    pub nodes_processed: usize,
    pub columns: usize,
    pub cg_iterations: usize,
    pub descent_iterations: usize,
    pub seconds: f64,
}

impl From<&SolverStats> for StatsFile {
    fn from(s: &SolverStats) -> Self {
        Self {
            nodes_evaluated: s.nodes_evaluated,
            nodes_processed: s.nodes_processed,
            columns: s.columns,
            cg_iterations: s.cg_iterations,
            descent_iterations: s.descent_iterations,
            seconds: s.seconds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Randomized,
    Deterministic,
}

/// A solved strategy; deterministic results have a single support entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub kind: StrategyKind,
    pub value: f64,
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub limit_reached: bool,
    pub support: Vec<SupportEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsFile>,
}

impl From<&SolverResult> for ResultFile {
    fn from(r: &SolverResult) -> Self {
        Self {
            kind: StrategyKind::Randomized,
            value: r.value,
            gap: r.gap,
            lower_bound: Some(r.lower_bound),
            zeta: Some(r.zeta),
            limit_reached: r.limit_reached,
            support: r
                .strategy
                .iter()
                .map(|(p, u)| SupportEntry {
                    arcs: p.arcs().to_vec(),
                    prob: u,
                })
                .collect(),
            stats: Some(StatsFile::from(&r.stats)),
        }
    }
}

impl From<&DeterministicResult> for ResultFile {
    fn from(r: &DeterministicResult) -> Self {
        Self {
            kind: StrategyKind::Deterministic,
            value: r.value,
            gap: 0.0,
            lower_bound: None,
            zeta: None,
            limit_reached: false,
            support: vec![SupportEntry {
                arcs: r.plan.arcs().to_vec(),
                prob: 1.0,
            }],
            stats: None,
        }
    }
}

impl ResultFile {
    pub fn strategy(&self, num_arcs: usize) -> Result<RandomizedStrategy> {
        if self.support.is_empty() {
            bail!("result file has an empty support");
        }
        let plans = self
            .support
            .iter()
            .map(|s| InterdictionPlan::new(s.arcs.clone(), num_arcs))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RandomizedStrategy::new(plans, self.support.iter().map(|s| s.prob).collect())?)
    }
}

/// `"0 3:0.25;5:0.75"`-style rendering: arcs separated by spaces, plans by
/// semicolons.
pub fn format_support(support: &[(Vec<usize>, f64)]) -> String {
    support
        .iter()
        .map(|(arcs, p)| {
            let a: Vec<String> = arcs.iter().map(|e| e.to_string()).collect();
            format!("{}:{p}", a.join(" "))
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// One study instance, flat so it serializes to a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub gamma: f64,
    pub gamma_index: usize,
    pub instance: usize,
    pub factor_seed: u64,
    pub sample_seed: u64,
    pub mc_seed: u64,
    pub scenarios: usize,
    pub mc_count: usize,
    pub error: Option<String>,
    pub rand_value: Option<f64>,
    pub rand_lower_bound: Option<f64>,
    pub rand_gap: Option<f64>,
    pub rand_limit_reached: Option<bool>,
    pub rand_support: Option<String>,
    pub det_value: Option<f64>,
    pub det_plan: Option<String>,
    pub vrs: Option<f64>,
    pub cvar_r: Option<f64>,
    pub cvar_d: Option<f64>,
    pub rand_seconds: Option<f64>,
    pub det_seconds: Option<f64>,
    pub oos_seconds: Option<f64>,
}

impl From<&InstanceRecord> for RecordRow {
    fn from(r: &InstanceRecord) -> Self {
        let o = r.outcome.as_ref().ok();
        Self {
            gamma: r.gamma,
            gamma_index: r.gamma_index,
            instance: r.instance,
            factor_seed: r.seeds.factor,
            sample_seed: r.seeds.sample,
            mc_seed: r.seeds.monte_carlo,
            scenarios: r.scenarios,
            mc_count: r.mc_count,
            error: r.outcome.as_ref().err().cloned(),
            rand_value: o.map(|o| o.rand_value),
            rand_lower_bound: o.map(|o| o.rand_lower_bound),
            rand_gap: o.map(|o| o.rand_gap),
            rand_limit_reached: o.map(|o| o.rand_limit_reached),
            rand_support: o.map(|o| format_support(&o.rand_support)),
            det_value: o.map(|o| o.det_value),
            det_plan: o.map(|o| format_support(&[(o.det_plan.clone(), 1.0)])),
            vrs: o.map(|o| o.vrs),
            cvar_r: o.map(|o| o.cvar_r),
            cvar_d: o.map(|o| o.cvar_d),
            rand_seconds: o.map(|o| o.rand_seconds),
            det_seconds: o.map(|o| o.det_seconds),
            oos_seconds: o.map(|o| o.oos_seconds),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub gamma: f64,
    pub solved: usize,
    pub failed: usize,
    pub vrs_zero: usize,
    pub vrs_below_one: usize,
    pub vrs_at_least_one: usize,
    pub avg_vrs_at_least_one: Option<f64>,
    pub avg_cvar_r: Option<f64>,
    pub avg_cvar_d: Option<f64>,
    pub randomized_better: usize,
    pub avg_relative_difference: Option<f64>,
}

impl From<&GammaSummary> for SummaryRow {
    fn from(s: &GammaSummary) -> Self {
        Self {
            gamma: s.gamma,
            solved: s.solved,
            failed: s.failed,
            vrs_zero: s.vrs_zero,
            vrs_below_one: s.vrs_below_one,
            vrs_at_least_one: s.vrs_at_least_one,
            avg_vrs_at_least_one: s.avg_vrs_at_least_one,
            avg_cvar_r: s.avg_cvar_r,
            avg_cvar_d: s.avg_cvar_d,
            randomized_better: s.randomized_better,
            avg_relative_difference: s.avg_relative_difference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub rows: usize,
    pub cols: usize,
    pub network_seed: u64,
    pub scenarios: usize,
    pub budget: usize,
    pub alpha: f64,
    pub q_bar: f64,
    pub gammas: Vec<f64>,
    pub instances: usize,
    pub mc_count: usize,
    pub seed: u64,
    pub fresh_seeds_per_gamma: bool,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub settings: StudySettings,
    pub network: NetworkFile,
    pub records: Vec<RecordRow>,
    pub summaries: Vec<SummaryRow>,
}

impl From<&ExperimentReport> for ReportFile {
    fn from(r: &ExperimentReport) -> Self {
        let c = &r.config;
        Self {
            settings: StudySettings {
                rows: c.rows,
                cols: c.cols,
                network_seed: c.network_seed,
                scenarios: c.scenarios,
                budget: c.budget,
                alpha: c.alpha,
                q_bar: c.q_bar,
                gammas: c.gammas.clone(),
                instances: c.instances,
                mc_count: c.mc_count,
                seed: c.seed,
                fresh_seeds_per_gamma: c.fresh_seeds_per_gamma,
                eps: c.bnb.eps,
            },
            network: NetworkFile::from(&r.network),
            records: r.records.iter().map(RecordRow::from).collect(),
            summaries: r.summaries.iter().map(SummaryRow::from).collect(),
        }
    }
}
