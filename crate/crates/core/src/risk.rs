//! CVaR, the budgeted ambiguity set and worst-case evaluation of fixed
//! strategies.
//!
//! For a fixed randomized strategy `u`, the worst-case CVaR over the budgeted
//! set is the LP
//!
//! ```text
//! min t
//! s.t. ζ + Σw + Σw⁻ + Γχ + q̂ᵀβ − β_k + Σ_ℓ Δ_{ℓ,k}/(1−α) ≤ t   ∀k
//!      χ ≥ q̄_k β_k − w_k,   χ ≥ −q̄_k β_k − w⁻_k                ∀k
//!      Δ_{ℓ,k} ≥ u_ℓ (f_{ℓ,k} − ζ),  Δ ≥ 0,  w, w⁻, χ ≥ 0
//! ```
//!
//! and a maximizing distribution is read off the duals of the first family.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{flow_vector, InterdictionPlan, Network, ScenarioSet};
use crate::lp::{solve_lp, ConId, LinearModel, LpSolution, Sense, SolverConfig, VarId};
use crate::{Error, Result};

/// Probabilities below this are treated as zero.
pub const PROB_TOL: f64 = 1e-9;

/// `Q = {q ≥ 0, Σq = 1, q = q̂ + diag(q̄) z, |z| ≤ 1, ‖z‖₁ ≤ Γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetedAmbiguitySet {
    q_hat: Vec<f64>,
    q_bar: Vec<f64>,
    gamma: f64,
}

impl BudgetedAmbiguitySet {
    pub fn new(q_hat: Vec<f64>, q_bar: Vec<f64>, gamma: f64) -> Result<Self> {
        if q_hat.is_empty() {
            return Err(Error::EmptyScenarioSet);
        }
        if q_bar.len() != q_hat.len() {
            return Err(Error::DimensionMismatch {
                what: "deviation vector",
                expected: q_hat.len(),
                found: q_bar.len(),
            });
        }
        check_distribution(&q_hat)?;
        if q_bar.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("deviations must be finite and nonnegative".into()));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidInput(format!("perturbation budget {gamma} must be nonnegative")));
        }
        Ok(Self { q_hat, q_bar, gamma })
    }

    /// Uniform reference, common deviation, budget `gamma`.
    pub fn uniform(k: usize, q_bar: f64, gamma: f64) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k], vec![q_bar; k], gamma)
    }

    pub fn q_hat(&self) -> &[f64] {
        &self.q_hat
    }

    pub fn q_bar(&self) -> &[f64] {
        &self.q_bar
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.q_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_hat.is_empty()
    }

    /// Whether `q` lies in the set, up to `tol`.
    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        if q.len() != self.len() || q.iter().any(|&v| v < -tol) || (q.iter().sum::<f64>() - 1.0).abs() > tol {
            return false;
        }
        let mut budget = 0.0;
        for ((&qk, &h), &b) in q.iter().zip(&self.q_hat).zip(&self.q_bar) {
            let d = qk - h;
            if b == 0.0 {
                if d.abs() > tol {
                    return false;
                }
                continue;
            }
            let z = d / b;
            if z.abs() > 1.0 + tol / b {
                return false;
            }
            budget += z.abs();
        }
        let min_bar = self.q_bar.iter().copied().filter(|&b| b > 0.0).fold(f64::INFINITY, f64::min);
        budget <= self.gamma + tol * self.len() as f64 / min_bar
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= -PROB_TOL)) {
        return Err(Error::InvalidInput("probabilities must be nonnegative".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidInput(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// A finite mixture of interdiction plans.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedStrategy {
    support: Vec<InterdictionPlan>,
    probs: Vec<f64>,
}

impl RandomizedStrategy {
    pub fn new(support: Vec<InterdictionPlan>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                what: "strategy probabilities",
                expected: support.len(),
                found: probs.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::InvalidInput("strategy has empty support".into()));
        }
        check_distribution(&probs)?;
        let mut sorted: Vec<&InterdictionPlan> = support.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("strategy support repeats a plan".into()));
        }
        Ok(Self { support, probs })
    }

    pub fn point_mass(plan: InterdictionPlan) -> Self {
        Self {
            support: vec![plan],
            probs: vec![1.0],
        }
    }

    /// Drops plans with probability at most [`PROB_TOL`], renormalizes and
    /// sorts the support lexicographically.
    pub fn from_weights(plans: &[InterdictionPlan], weights: &[f64]) -> Result<Self> {
        let mut kept: Vec<(InterdictionPlan, f64)> = plans
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > PROB_TOL)
            .map(|(p, &w)| (p.clone(), w))
            .collect();
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(Error::InvalidInput("no plan carries positive weight".into()));
        }
        kept.sort_by(|a, b| a.0.cmp(&b.0));
        let (support, probs) = kept.into_iter().map(|(p, w)| (p, w / total)).unzip();
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[InterdictionPlan] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InterdictionPlan, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    pub fn check_budget(&self, budget: usize) -> Result<()> {
        match self.support.iter().find(|p| !p.within_budget(budget)) {
            Some(p) => Err(Error::InvalidInput(format!("plan {:?} exceeds budget {budget}", p.arcs()))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSpec {
    alpha: f64,
}

impl RiskSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidRiskLevel(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `1 / (1 − α)`.
    pub fn tail_weight(&self) -> f64 {
        1.0 / (1.0 - self.alpha)
    }
}

/// CVaR at level `alpha` of a discrete distribution, by summing the upper
/// `1 − α` tail of the sorted values.
pub fn cvar_discrete(values: &[f64], probs: &[f64], alpha: f64) -> Result<f64> {
    let risk = RiskSpec::new(alpha)?;
    if values.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            what: "probabilities",
            expected: values.len(),
            found: probs.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    check_distribution(probs)?;
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(sorted_tail(&pairs, risk))
}

/// Tail sum over `(value, prob)` pairs sorted by decreasing value.
pub(crate) fn sorted_tail(pairs: &[(f64, f64)], risk: RiskSpec) -> f64 {
    let mass = 1.0 - risk.alpha;
    let mut remaining = mass;
    let mut sum = 0.0;
    for &(v, p) in pairs {
        if remaining <= 0.0 {
            break;
        }
        let take = p.max(0.0).min(remaining);
        sum += take * v;
        remaining -= take;
    }
    sum / mass
}

/// Variables shared by every LP built on the robust counterpart of the
/// worst-case CVaR constraint.
#[derive(Debug, Clone)]
pub(crate) struct RobustCore {
    pub t: VarId,
    pub zeta: VarId,
    pub w: Vec<VarId>,
    pub w_minus: Vec<VarId>,
    pub chi: VarId,
    pub beta: Vec<VarId>,
}

impl RobustCore {
    pub fn add_vars(model: &mut LinearModel, scenarios: usize, zeta_lo: f64, zeta_hi: f64) -> Self {
        let t = model.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let zeta = model.add_var("zeta", zeta_lo, zeta_hi, 0.0);
        let w = (0..scenarios).map(|k| model.add_var(format!("w[{k}]"), 0.0, f64::INFINITY, 0.0)).collect();
        let w_minus = (0..scenarios)
            .map(|k| model.add_var(format!("w_minus[{k}]"), 0.0, f64::INFINITY, 0.0))
            .collect();
        let chi = model.add_var("chi", 0.0, f64::INFINITY, 0.0);
        let beta = (0..scenarios)
            .map(|k| model.add_var(format!("beta[{k}]"), f64::NEG_INFINITY, f64::INFINITY, 0.0))
            .collect();
        Self {
            t,
            zeta,
            w,
            w_minus,
            chi,
            beta,
        }
    }

    /// Adds the epigraph rows (one per scenario, `tail[k]` lists the excess
    /// variables of scenario `k`) followed by the two deviation families.
    /// Returns the epigraph row ids.
    pub fn add_rows(
        &self,
        model: &mut LinearModel,
        amb: &BudgetedAmbiguitySet,
        risk: RiskSpec,
        tail: &[Vec<VarId>],
    ) -> Result<Vec<ConId>> {
        let kk = amb.len();
        let scale = risk.tail_weight();
        let mut epigraph = Vec::with_capacity(kk);
        for k in 0..kk {
            let mut row: Vec<(VarId, f64)> = vec![(self.zeta, 1.0), (self.chi, amb.gamma()), (self.t, -1.0)];
            row.extend(self.w.iter().map(|&v| (v, 1.0)));
            row.extend(self.w_minus.iter().map(|&v| (v, 1.0)));
            row.extend(self.beta.iter().zip(amb.q_hat()).map(|(&v, &q)| (v, q)));
            row.push((self.beta[k], -1.0));
            row.extend(tail[k].iter().map(|&d| (d, scale)));
            epigraph.push(model.add_constraint(format!("epigraph[{k}]"), row, Sense::Le, 0.0)?);
        }
        for k in 0..kk {
            let b = amb.q_bar()[k];
            model.add_constraint(
                format!("chi_plus[{k}]"),
                [(self.beta[k], b), (self.w[k], -1.0), (self.chi, -1.0)],
                Sense::Le,
                0.0,
            )?;
            model.add_constraint(
                format!("chi_minus[{k}]"),
                [(self.beta[k], -b), (self.w_minus[k], -1.0), (self.chi, -1.0)],
                Sense::Le,
                0.0,
            )?;
        }
        Ok(epigraph)
    }

    /// The maximizing distribution: epigraph duals, sign-flipped.
    pub fn worst_q(sol: &LpSolution, epigraph: &[ConId]) -> Vec<f64> {
        epigraph.iter().map(|&c| (-sol.dual(c)).max(0.0)).collect()
    }
}

/// Value of a worst-case evaluation together with a maximizing distribution
/// and a minimizing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    pub q: Vec<f64>,
    pub zeta: f64,
}

/// Worst-case CVaR of a mixture given each support plan's flow vector,
/// with the threshold restricted to `[zeta_lo, zeta_hi]`.
///
/// With the range covering all flow values this is exactly
/// `sup_{q∈Q} CVaR_α`; a narrower range gives the minimum restricted to it.
pub fn worst_case_cvar_of_flows(
    flows: &[Vec<f64>],
    probs: &[f64],
    amb: &BudgetedAmbiguitySet,
    risk: RiskSpec,
    zeta_range: (f64, f64),
    cfg: &SolverConfig,
) -> Result<WorstCase> {
    let kk = amb.len();
    if let Some(f) = flows.iter().find(|f| f.len() != kk) {
        return Err(Error::DimensionMismatch {
            what: "flow vector",
            expected: kk,
            found: f.len(),
        });
    }
    let mut model = LinearModel::new();
    let core = RobustCore::add_vars(&mut model, kk, zeta_range.0, zeta_range.1);
    let active: Vec<usize> = (0..flows.len()).filter(|&j| probs[j] > PROB_TOL).collect();
    let mut tail = vec![Vec::with_capacity(active.len()); kk];
    let mut delta = Vec::with_capacity(active.len());
    for &j in &active {
        let row: Vec<VarId> = (0..kk)
            .map(|k| model.add_var(format!("delta[{j},{k}]"), 0.0, f64::INFINITY, 0.0))
            .collect();
        for k in 0..kk {
            tail[k].push(row[k]);
        }
        delta.push(row);
    }
    let epigraph = core.add_rows(&mut model, amb, risk, &tail)?;
    for (&j, row) in active.iter().zip(&delta) {
        let u = probs[j];
        for k in 0..kk {
            model.add_constraint(
                format!("excess[{j},{k}]"),
                [(row[k], 1.0), (core.zeta, u)],
                Sense::Ge,
                u * flows[j][k],
            )?;
        }
    }
    let sol = solve_lp(&model, cfg)?.require_optimal()?;
    Ok(WorstCase {
        value: sol.objective,
        q: RobustCore::worst_q(&sol, &epigraph),
        zeta: sol.value(core.zeta),
    })
}

fn zeta_cover(flows: &[Vec<f64>]) -> (f64, f64) {
    let hi = flows.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    (0.0, hi)
}

/// Flow vectors of every support plan.
pub fn strategy_flows(net: &Network, scenarios: &ScenarioSet, strategy: &RandomizedStrategy) -> Result<Vec<Vec<f64>>> {
    strategy.support().iter().map(|p| flow_vector(net, scenarios, p)).collect()
}

fn check_sizes(scenarios: &ScenarioSet, amb: &BudgetedAmbiguitySet) -> Result<()> {
    if scenarios.len() != amb.len() {
        return Err(Error::DimensionMismatch {
            what: "ambiguity set",
            expected: scenarios.len(),
            found: amb.len(),
        });
    }
    Ok(())
}

/// `sup_{q∈Q} CVaR_α` of the flow when the plan is drawn from `strategy` and
/// the scenario from `q`.
pub fn worst_case_cvar(
    net: &Network,
    scenarios: &ScenarioSet,
    amb: &BudgetedAmbiguitySet,
    strategy: &RandomizedStrategy,
    risk: RiskSpec,
) -> Result<WorstCase> {
    check_sizes(scenarios, amb)?;
    let flows = strategy_flows(net, scenarios, strategy)?;
    worst_case_cvar_of_flows(&flows, strategy.probs(), amb, risk, zeta_cover(&flows), &SolverConfig::default())
}

/// Worst-case CVaR of the per-scenario expected flow `E_{ℓ∼u}[f(ℓ, k)]`.
pub fn loizou_objective(
    net: &Network,
    scenarios: &ScenarioSet,
    amb: &BudgetedAmbiguitySet,
    strategy: &RandomizedStrategy,
    risk: RiskSpec,
) -> Result<WorstCase> {
    check_sizes(scenarios, amb)?;
    let flows = strategy_flows(net, scenarios, strategy)?;
    let mut mean = vec![0.0; scenarios.len()];
    for (f, &u) in flows.iter().zip(strategy.probs()) {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += u * v;
        }
    }
    let pseudo = [mean];
    worst_case_cvar_of_flows(&pseudo, &[1.0], amb, risk, zeta_cover(&pseudo), &SolverConfig::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// The first strategy's flow is stochastically smaller.
    FirstDominates,
    SecondDominates,
    Incomparable,
    Equal,
}

fn joint_distribution(
    net: &Network,
    scenarios: &ScenarioSet,
    q: &[f64],
    s: &RandomizedStrategy,
) -> Result<Vec<(f64, f64)>> {
    let flows = strategy_flows(net, scenarios, s)?;
    let mut out = Vec::with_capacity(flows.len() * q.len());
    for (f, &u) in flows.iter().zip(s.probs()) {
        for (&v, &qk) in f.iter().zip(q) {
            out.push((v, u * qk));
        }
    }
    Ok(out)
}

/// Compares the survival functions `P(f ≥ x)` of the flows induced by two
/// strategies under the scenario distribution `q`, at every jump point.
pub fn dominance_check(
    net: &Network,
    scenarios: &ScenarioSet,
    q: &[f64],
    a: &RandomizedStrategy,
    b: &RandomizedStrategy,
) -> Result<Dominance> {
    if q.len() != scenarios.len() {
        return Err(Error::DimensionMismatch {
            what: "scenario distribution",
            expected: scenarios.len(),
            found: q.len(),
        });
    }
    check_distribution(q)?;
    let da = joint_distribution(net, scenarios, q, a)?;
    let db = joint_distribution(net, scenarios, q, b)?;
    Ok(compare_survival(&da, &db))
}

pub(crate) fn compare_survival(da: &[(f64, f64)], db: &[(f64, f64)]) -> Dominance {
    const TOL: f64 = 1e-12;
    let survival = |d: &[(f64, f64)], x: f64| d.iter().filter(|(v, _)| *v >= x).map(|(_, p)| p).sum::<f64>();
    let (mut a_lower, mut b_lower) = (false, false);
    for &(x, _) in da.iter().chain(db) {
        let (sa, sb) = (survival(da, x), survival(db, x));
        if sa < sb - TOL {
            a_lower = true;
        } else if sb < sa - TOL {
            b_lower = true;
        }
    }
    match (a_lower, b_lower) {
        (false, false) => Dominance::Equal,
        (true, false) => Dominance::FirstDominates,
        (false, true) => Dominance::SecondDominates,
        (true, true) => Dominance::Incomparable,
    }
}
