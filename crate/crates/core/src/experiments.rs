//! Scenario sampling, out-of-sample evaluation and the in-/out-of-sample
//! study comparing randomized and deterministic interdiction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::{solve_deterministic_enumerate, solve_deterministic_milp, BaselineConfig, DeterministicResult};
use crate::bnb::{spatial_bnb, BnbConfig, SolverResult};
use crate::graph::{count_plans, enumerate_plans, generate_grid, max_flow, CapacityVector, Network, ScenarioSet};
use crate::risk::{sorted_tail, BudgetedAmbiguitySet, RandomizedStrategy, RiskSpec};
use crate::{Clock, Error, Instance, Result};

/// The river-crossing game: three parallel routes T1, T2 (tunnels) and B
/// (bridge), four congestion scenarios, budget two, and the budgeted set
/// `q̂ = ¼·1`, `q̄ = ¼·1`, `Γ = 2`.
pub fn river_crossing(tau: f64, eps: f64, delta: f64, alpha: f64) -> Result<Instance> {
    let net = Network::new(2, 0, 1, vec![(0, 1); 3])?;
    let sc = ScenarioSet::new(
        3,
        vec![
            vec![tau - delta, tau, eps - delta],
            vec![tau, tau - delta, eps - delta],
            vec![tau - delta, tau, eps],
            vec![tau, tau - delta, eps],
        ],
    )?;
    let amb = BudgetedAmbiguitySet::uniform(4, 0.25, 2.0)?;
    Instance::new(net, sc, amb, RiskSpec::new(alpha)?, 2)
}

/// Source of random capacity vectors.
pub trait CapacitySampler {
    fn num_arcs(&self) -> usize;
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}

/// `c = F ξ` with independent exponential factors `ξ_i` of mean `μ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    loadings: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl FactorModel {
    /// `loadings[e][i]` is the weight of factor `i` on arc `e`.
    pub fn new(loadings: Vec<Vec<f64>>, mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || mu.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidInput("factor means must be positive".into()));
        }
        for row in &loadings {
            if row.len() != mu.len() {
                return Err(Error::DimensionMismatch {
                    what: "factor loadings",
                    expected: mu.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidInput("factor loadings must be nonnegative".into()));
            }
        }
        Ok(Self { loadings, mu })
    }

    /// Two factors, loadings uniform on `[0, 1]`, means uniform on `[1, 5]`.
    pub fn random(num_arcs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let loadings = (0..num_arcs)
            .map(|_| (0..2).map(|_| rng.random_range(0.0..=1.0)).collect())
            .collect();
        let mu = (0..2).map(|_| rng.random_range(1.0..=5.0)).collect();
        Self { loadings, mu }
    }

    pub fn loadings(&self) -> &[Vec<f64>] {
        &self.loadings
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
}

impl CapacitySampler for FactorModel {
    fn num_arcs(&self) -> usize {
        self.loadings.len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let xi: Vec<f64> = self
            .mu
            .iter()
            .map(|&m| {
                let u: f64 = rng.random();
                -m * libm::log1p(-u)
            })
            .collect();
        self.loadings
            .iter()
            .map(|row| row.iter().zip(&xi).map(|(a, x)| a * x).sum())
            .collect()
    }
}

/// `count` independent capacity vectors; identical for identical seeds.
pub fn sample_scenarios(sampler: &dyn CapacitySampler, count: usize, seed: u64) -> Result<ScenarioSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let caps = (0..count).map(|_| sampler.sample(&mut rng)).collect();
    ScenarioSet::new(sampler.num_arcs(), caps)
}

/// Value of the randomized solution, in percent: `(det − rand) / rand · 100`.
pub fn vrs(det_value: f64, rand_value: f64) -> Result<f64> {
    if !(rand_value > 0.0) {
        return Err(Error::VrsUndefined(rand_value));
    }
    Ok((det_value - rand_value) / rand_value * 100.0)
}

/// Monte-Carlo CVaR of the flow when plans are drawn from `strategy` and
/// capacities from `sampler`: each (plan, draw) pair carries probability
/// `u_ℓ / mc_count`.
pub fn out_of_sample_cvar(
    net: &Network,
    sampler: &dyn CapacitySampler,
    strategy: &RandomizedStrategy,
    risk: RiskSpec,
    mc_count: usize,
    seed: u64,
) -> Result<f64> {
    if mc_count == 0 {
        return Err(Error::EmptyScenarioSet);
    }
    if sampler.num_arcs() != net.num_arcs() {
        return Err(Error::DimensionMismatch {
            what: "sampled capacities",
            expected: net.num_arcs(),
            found: sampler.num_arcs(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(mc_count * strategy.support().len());
    let w = 1.0 / mc_count as f64;
    for _ in 0..mc_count {
        let cap = CapacityVector::new(sampler.sample(&mut rng))?;
        for (plan, u) in strategy.iter() {
            pairs.push((max_flow(net, &cap, plan)?.value, u * w));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(sorted_tail(&pairs, risk))
}

/// Seed mixing (SplitMix64 finalizer) for deriving independent sub-seeds.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
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
    /// Draw new sample sets for every `Γ`; otherwise the same sets are
    /// reused across levels.
    pub fresh_seeds_per_gamma: bool,
    pub bnb: BnbConfig,
    pub baseline: BaselineConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 2,
            network_seed: 0,
            scenarios: 20,
            budget: 1,
            alpha: 0.05,
            q_bar: 1.0,
            gammas: vec![0.0, 0.1, 0.5, 1.0, 10.0, 20.0],
            instances: 20,
            mc_count: 10_000,
            seed: 1,
            fresh_seeds_per_gamma: true,
            bnb: BnbConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSeeds {
    pub factor: u64,
    pub sample: u64,
    pub monte_carlo: u64,
}

impl InstanceSeeds {
    pub fn derive(cfg: &StudyConfig, gamma_index: usize, instance: usize) -> Self {
        let level = if cfg.fresh_seeds_per_gamma { gamma_index as u64 + 1 } else { 0 };
        let base = mix_seed(mix_seed(cfg.seed, level), instance as u64);
        Self {
            factor: mix_seed(base, 1),
            sample: mix_seed(base, 2),
            monte_carlo: mix_seed(base, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOutcome {
    pub rand_value: f64,
    pub rand_lower_bound: f64,
    pub rand_gap: f64,
    pub rand_support: Vec<(Vec<usize>, f64)>,
    pub rand_limit_reached: bool,
    pub det_value: f64,
    pub det_plan: Vec<usize>,
    pub vrs: f64,
    pub cvar_r: f64,
    pub cvar_d: f64,
    pub rand_seconds: f64,
    pub det_seconds: f64,
    pub oos_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub gamma: f64,
    pub gamma_index: usize,
    pub instance: usize,
    pub seeds: InstanceSeeds,
    pub scenarios: usize,
    pub mc_count: usize,
    /// Failures are kept as messages so one bad instance does not end a
    /// study.
    pub outcome: core::result::Result<InstanceOutcome, String>,
}

/// Counts and averages for one `Γ` level.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSummary {
    pub gamma: f64,
    pub solved: usize,
    pub failed: usize,
    pub vrs_zero: usize,
    pub vrs_below_one: usize,
    pub vrs_at_least_one: usize,
    pub avg_vrs_at_least_one: Option<f64>,
    /// Out-of-sample comparison over instances with `VRS ≥ 1%`.
    pub avg_cvar_r: Option<f64>,
    pub avg_cvar_d: Option<f64>,
    pub randomized_better: usize,
    pub avg_relative_difference: Option<f64>,
}

/// VRS values at or below this many percentage points count as zero; it
/// matches the solver's default relative tolerance.
pub const VRS_ZERO_PP: f64 = 0.01;

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Per-level summary, a pure fold over the records.
pub fn summarize(records: &[InstanceRecord], gammas: &[f64]) -> Vec<GammaSummary> {
    gammas
        .iter()
        .enumerate()
        .map(|(gi, &gamma)| {
            let level: Vec<&InstanceRecord> = records.iter().filter(|r| r.gamma_index == gi).collect();
            let solved: Vec<&InstanceOutcome> = level.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let large: Vec<&&InstanceOutcome> = solved.iter().filter(|o| o.vrs >= 1.0).collect();
            GammaSummary {
                gamma,
                solved: solved.len(),
                failed: level.len() - solved.len(),
                vrs_zero: solved.iter().filter(|o| o.vrs <= VRS_ZERO_PP).count(),
                vrs_below_one: solved.iter().filter(|o| o.vrs > VRS_ZERO_PP && o.vrs < 1.0).count(),
                vrs_at_least_one: large.len(),
                avg_vrs_at_least_one: mean(large.iter().map(|o| o.vrs)),
                avg_cvar_r: mean(large.iter().map(|o| o.cvar_r)),
                avg_cvar_d: mean(large.iter().map(|o| o.cvar_d)),
                randomized_better: large.iter().filter(|o| o.cvar_r < o.cvar_d).count(),
                avg_relative_difference: mean(large.iter().map(|o| (o.cvar_r - o.cvar_d) / o.cvar_d)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: StudyConfig,
    pub network: Network,
    pub records: Vec<InstanceRecord>,
    pub summaries: Vec<GammaSummary>,
}

fn solve_deterministic(inst: &Instance, cfg: &BaselineConfig) -> Result<DeterministicResult> {
    let n = count_plans(inst.net.num_arcs(), inst.budget);
    if n <= cfg.milp_plan_cap as u128 {
        let plans = enumerate_plans(inst.net.num_arcs(), inst.budget, n)?;
        solve_deterministic_milp(inst, &plans, cfg)
    } else {
        solve_deterministic_enumerate(inst, cfg)
    }
}

fn support_of(r: &SolverResult) -> Vec<(Vec<usize>, f64)> {
    r.strategy.iter().map(|(p, u)| (p.arcs().to_vec(), u)).collect()
}

/// Solves one sampled instance both ways and evaluates both strategies on
/// fresh draws from the same factor model.
pub fn run_instance(
    net: &Network,
    cfg: &StudyConfig,
    gamma: f64,
    seeds: InstanceSeeds,
    clock: &dyn Clock,
) -> Result<InstanceOutcome> {
    let fm = FactorModel::random(net.num_arcs(), seeds.factor);
    let scenarios = sample_scenarios(&fm, cfg.scenarios, seeds.sample)?;
    let amb = BudgetedAmbiguitySet::uniform(cfg.scenarios, cfg.q_bar, gamma)?;
    let risk = RiskSpec::new(cfg.alpha)?;
    let inst = Instance::new(net.clone(), scenarios, amb, risk, cfg.budget)?;

    let t0 = clock.elapsed_secs();
    let rand = spatial_bnb(&inst, &cfg.bnb, clock, &mut |_| {})?;
    let t1 = clock.elapsed_secs();
    let det = solve_deterministic(&inst, &cfg.baseline)?;
    let t2 = clock.elapsed_secs();
    let cvar_r = out_of_sample_cvar(net, &fm, &rand.strategy, risk, cfg.mc_count, seeds.monte_carlo)?;
    let cvar_d = out_of_sample_cvar(
        net,
        &fm,
        &RandomizedStrategy::point_mass(det.plan.clone()),
        risk,
        cfg.mc_count,
        seeds.monte_carlo,
    )?;
    let t3 = clock.elapsed_secs();
    Ok(InstanceOutcome {
        vrs: vrs(det.value, rand.value)?,
        rand_value: rand.value,
        rand_lower_bound: rand.lower_bound,
        rand_gap: rand.gap,
        rand_support: support_of(&rand),
        rand_limit_reached: rand.limit_reached,
        det_value: det.value,
        det_plan: det.plan.arcs().to_vec(),
        cvar_r,
        cvar_d,
        rand_seconds: t1 - t0,
        det_seconds: t2 - t1,
        oos_seconds: t3 - t2,
    })
}

/// Runs every (`Γ`, instance) pair of the study. Per-instance failures are
/// recorded and the study continues.
pub fn run_study(
    cfg: &StudyConfig,
    clock: &dyn Clock,
    progress: &mut dyn FnMut(&InstanceRecord),
) -> Result<ExperimentReport> {
    if cfg.scenarios == 0 {
        return Err(Error::EmptyScenarioSet);
    }
    RiskSpec::new(cfg.alpha)?;
    let network = generate_grid(cfg.rows, cfg.cols, cfg.network_seed)?;
    let mut records = Vec::with_capacity(cfg.gammas.len() * cfg.instances);
    for (gi, &gamma) in cfg.gammas.iter().enumerate() {
        for i in 0..cfg.instances {
            let seeds = InstanceSeeds::derive(cfg, gi, i);
            let outcome = run_instance(&network, cfg, gamma, seeds, clock).map_err(|e| e.to_string());
            if let Err(msg) = &outcome {
                log::warn!("Γ={gamma} instance {i}: {msg}");
            }
            let rec = InstanceRecord {
                gamma,
                gamma_index: gi,
                instance: i,
                seeds,
                scenarios: cfg.scenarios,
                mc_count: cfg.mc_count,
                outcome,
            };
            progress(&rec);
            records.push(rec);
        }
    }
    let summaries = summarize(&records, &cfg.gammas);
    Ok(ExperimentReport {
        config: cfg.clone(),
        network,
        records,
        summaries,
    })
}

/// Error message for a record, if it failed.
pub fn failure(rec: &InstanceRecord) -> Option<String> {
    rec.outcome.as_ref().err().map(|e| format!("Γ={} instance {}: {e}", rec.gamma, rec.instance))
}
