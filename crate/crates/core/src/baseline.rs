//! Optimal deterministic (single-plan) interdiction.

use alloc::format;
use alloc::vec::Vec;

use crate::graph::{enumerate_plans, flow_vector, InterdictionPlan};
use crate::instance::Instance;
use crate::lp::{solve_mip, LinearModel, MipStatus, Sense, SolverConfig, VarId};
use crate::risk::{worst_case_cvar_of_flows, RobustCore};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicResult {
    pub plan: InterdictionPlan,
    /// Worst-case CVaR of always playing `plan`.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub lp: SolverConfig,
    /// Largest plan universe the MILP is built for.
    pub milp_plan_cap: usize,
    /// Largest plan universe enumerated.
    pub enumeration_cap: u128,
    /// Plans whose values are within this relative tolerance of the best
    /// are treated as tied; the lexicographically smallest wins.
    pub tie_tol: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            lp: SolverConfig {
                mip_gap: 1e-10,
                ..SolverConfig::default()
            },
            milp_plan_cap: 2_000,
            enumeration_cap: 100_000,
            tie_tol: 1e-7,
        }
    }
}

fn tie_limit(best: f64, tol: f64) -> f64 {
    best + tol * best.abs().max(1.0)
}

fn point_value(flows: &[f64], inst: &Instance, cfg: &SolverConfig) -> Result<f64> {
    let hi = flows.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(worst_case_cvar_of_flows(&[flows.to_vec()], &[1.0], &inst.amb, inst.risk, (0.0, hi), cfg)?.value)
}

/// Brute force over every plan within the budget.
pub fn solve_deterministic_enumerate(inst: &Instance, cfg: &BaselineConfig) -> Result<DeterministicResult> {
    let plans = enumerate_plans(inst.net.num_arcs(), inst.budget, cfg.enumeration_cap)?;
    let mut values = Vec::with_capacity(plans.len());
    for p in &plans {
        let f = flow_vector(&inst.net, &inst.scenarios, p)?;
        values.push(point_value(&f, inst, &cfg.lp)?);
    }
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = tie_limit(best, cfg.tie_tol);
    let (plan, value) = plans
        .into_iter()
        .zip(values)
        .filter(|(_, v)| *v <= limit)
        .min_by(|a, b| a.0.cmp(&b.0))
        .expect("the empty plan is always feasible");
    Ok(DeterministicResult { plan, value })
}

struct DetModel {
    model: LinearModel,
    t: VarId,
    u: Vec<VarId>,
}

/// Plan-indexed MILP: one binary per plan, `η_ℓ = u_ℓ ζ` linearized with
/// the big-M `ζ̄`, the robust counterpart on top.
fn build_deterministic_milp(inst: &Instance, flows: &[Vec<f64>]) -> Result<DetModel> {
    let kk = inst.num_scenarios();
    let zbar = inst.zeta_bar();
    let mut model = LinearModel::new();
    let core = RobustCore::add_vars(&mut model, kk, 0.0, zbar);
    let mut u = Vec::with_capacity(flows.len());
    let mut eta = Vec::with_capacity(flows.len());
    let mut delta: Vec<Vec<VarId>> = Vec::with_capacity(flows.len());
    for j in 0..flows.len() {
        u.push(model.add_var(format!("u[{j}]"), 0.0, 1.0, 0.0));
        eta.push(model.add_var(format!("eta[{j}]"), 0.0, f64::INFINITY, 0.0));
        delta.push(
            (0..kk)
                .map(|k| model.add_var(format!("delta[{j},{k}]"), 0.0, f64::INFINITY, 0.0))
                .collect(),
        );
    }
    let tail: Vec<Vec<VarId>> = (0..kk).map(|k| delta.iter().map(|d| d[k]).collect()).collect();
    core.add_rows(&mut model, &inst.amb, inst.risk, &tail)?;
    model.add_constraint("sum_u", u.iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0)?;
    for (j, f) in flows.iter().enumerate() {
        for k in 0..kk {
            model.add_constraint(
                format!("excess[{j},{k}]"),
                [(delta[j][k], 1.0), (u[j], -f[k]), (eta[j], 1.0)],
                Sense::Ge,
                0.0,
            )?;
        }
        model.add_constraint(
            format!("eta_on[{j}]"),
            [(eta[j], 1.0), (core.zeta, -1.0), (u[j], -zbar)],
            Sense::Ge,
            -zbar,
        )?;
        model.add_constraint(format!("eta_le_zeta[{j}]"), [(eta[j], 1.0), (core.zeta, -1.0)], Sense::Le, 0.0)?;
        model.add_constraint(format!("eta_off[{j}]"), [(eta[j], 1.0), (u[j], -zbar)], Sense::Le, 0.0)?;
    }
    Ok(DetModel { model, t: core.t, u })
}

fn chosen(values: &[f64], u: &[VarId]) -> usize {
    (0..u.len())
        .max_by(|&a, &b| values[u[a].0].total_cmp(&values[u[b].0]).then(b.cmp(&a)))
        .expect("nonempty universe")
}

/// Solves the plan-indexed MILP over `plans`. Ties are resolved by a second
/// MILP that minimizes the lexicographic rank among near-optimal plans.
pub fn solve_deterministic_milp(
    inst: &Instance,
    plans: &[InterdictionPlan],
    cfg: &BaselineConfig,
) -> Result<DeterministicResult> {
    if plans.is_empty() {
        return Err(Error::InvalidInput("empty plan universe".into()));
    }
    if plans.len() > cfg.milp_plan_cap {
        return Err(Error::EnumerationCap {
            count: plans.len() as u128,
            cap: cfg.milp_plan_cap as u128,
        });
    }
    if let Some(p) = plans.iter().find(|p| !p.within_budget(inst.budget)) {
        return Err(Error::InvalidInput(format!("plan {:?} exceeds the budget", p.arcs())));
    }
    let mut sorted: Vec<InterdictionPlan> = plans.to_vec();
    sorted.sort();
    sorted.dedup();
    let flows = sorted
        .iter()
        .map(|p| flow_vector(&inst.net, &inst.scenarios, p))
        .collect::<Result<Vec<_>>>()?;

    let mut dm = build_deterministic_milp(inst, &flows)?;
    let first = solve_mip(&dm.model, &dm.u, &cfg.lp)?;
    if first.status != MipStatus::Optimal {
        return Err(Error::InvalidInput(format!("deterministic MILP ended with {:?}", first.status)));
    }
    let best = first.objective;

    // Lexicographic tie-break: stay within the tie tolerance, minimize rank.
    let limit = tie_limit(best, cfg.tie_tol);
    dm.model.add_constraint("near_optimal", [(dm.t, 1.0)], Sense::Le, limit)?;
    dm.model.set_objective(dm.t, 0.0);
    for (rank, &v) in dm.u.iter().enumerate() {
        dm.model.set_objective(v, rank as f64);
    }
    let second = solve_mip(&dm.model, &dm.u, &cfg.lp)?;
    let j = if second.status == MipStatus::Optimal {
        chosen(&second.values, &dm.u)
    } else {
        chosen(&first.values, &dm.u)
    };
    let value = point_value(&flows[j], inst, &cfg.lp)?;
    Ok(DeterministicResult {
        plan: sorted[j].clone(),
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, Network, ScenarioSet};
    use crate::risk::{worst_case_cvar, BudgetedAmbiguitySet, RandomizedStrategy, RiskSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn river(budget: usize) -> Instance {
        let (tau, eps, delta) = (3.0, 2.5, 1.5);
        let net = Network::new(2, 0, 1, alloc::vec![(0, 1); 3]).unwrap();
        let sc = ScenarioSet::new(
            3,
            alloc::vec![
                alloc::vec![tau - delta, tau, eps - delta],
                alloc::vec![tau, tau - delta, eps - delta],
                alloc::vec![tau - delta, tau, eps],
                alloc::vec![tau, tau - delta, eps],
            ],
        )
        .unwrap();
        let amb = BudgetedAmbiguitySet::uniform(4, 0.25, 2.0).unwrap();
        Instance::new(net, sc, amb, RiskSpec::new(0.5).unwrap(), budget).unwrap()
    }

    #[test]
    fn river_crossing_picks_both_tracks() {
        let inst = river(2);
        let cfg = BaselineConfig::default();
        let e = solve_deterministic_enumerate(&inst, &cfg).unwrap();
        assert_eq!(e.plan.arcs(), &[0, 1]);
        assert!((e.value - 2.5).abs() < 1e-7);
        let plans = enumerate_plans(3, 2, 100).unwrap();
        assert_eq!(plans.len(), 7);
        let m = solve_deterministic_milp(&inst, &plans, &cfg).unwrap();
        assert_eq!(m, e);
    }

    #[test]
    fn zero_budget_is_the_empty_plan() {
        let inst = river(0);
        let cfg = BaselineConfig::default();
        let e = solve_deterministic_enumerate(&inst, &cfg).unwrap();
        assert!(e.plan.is_empty());
        let direct = worst_case_cvar(
            &inst.net,
            &inst.scenarios,
            &inst.amb,
            &RandomizedStrategy::point_mass(InterdictionPlan::empty()),
            inst.risk,
        )
        .unwrap();
        assert!((e.value - direct.value).abs() < 1e-9);
        let m = solve_deterministic_milp(&inst, &[InterdictionPlan::empty()], &cfg).unwrap();
        assert_eq!(m, e);
    }

    #[test]
    fn ties_go_to_the_smallest_plan() {
        // Three parallel identical arcs: every single-arc plan is equally good.
        let net = Network::new(2, 0, 1, alloc::vec![(0, 1); 3]).unwrap();
        let sc = ScenarioSet::new(3, alloc::vec![alloc::vec![1.0, 1.0, 1.0], alloc::vec![2.0, 2.0, 2.0]]).unwrap();
        let amb = BudgetedAmbiguitySet::uniform(2, 0.5, 1.0).unwrap();
        let inst = Instance::new(net, sc, amb, RiskSpec::new(0.3).unwrap(), 1).unwrap();
        let cfg = BaselineConfig::default();
        let e = solve_deterministic_enumerate(&inst, &cfg).unwrap();
        assert_eq!(e.plan.arcs(), &[0]);
        let mut plans = enumerate_plans(3, 1, 10).unwrap();
        plans.reverse();
        assert_eq!(solve_deterministic_milp(&inst, &plans, &cfg).unwrap(), e);
    }

    #[test]
    fn milp_matches_enumeration_on_grids() {
        let cfg = BaselineConfig::default();
        for seed in 0..6u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let net = generate_grid(4, 2, seed).unwrap();
            let k = 3 + (seed as usize % 4);
            let caps = (0..k)
                .map(|_| (0..net.num_arcs()).map(|_| rng.random_range(0.0..5.0)).collect())
                .collect();
            let sc = ScenarioSet::new(net.num_arcs(), caps).unwrap();
            let amb = BudgetedAmbiguitySet::uniform(k, 1.0, [0.0, 1.0, 10.0][seed as usize % 3]).unwrap();
            let inst = Instance::new(net, sc, amb, RiskSpec::new(0.05).unwrap(), 1).unwrap();
            let plans = enumerate_plans(inst.net.num_arcs(), 1, 1000).unwrap();
            let e = solve_deterministic_enumerate(&inst, &cfg).unwrap();
            let m = solve_deterministic_milp(&inst, &plans, &cfg).unwrap();
            assert_eq!(m.plan, e.plan, "seed {seed}");
            assert!((m.value - e.value).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_oversized_universes() {
        let inst = river(2);
        let cfg = BaselineConfig {
            milp_plan_cap: 3,
            enumeration_cap: 3,
            ..BaselineConfig::default()
        };
        let plans = enumerate_plans(3, 2, 100).unwrap();
        assert!(matches!(
            solve_deterministic_milp(&inst, &plans, &cfg),
            Err(Error::EnumerationCap { .. })
        ));
        assert!(matches!(
            solve_deterministic_enumerate(&inst, &cfg),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
