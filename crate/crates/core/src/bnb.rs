//! Global solution by spatial branch-and-bound over the CVaR threshold `ζ`.
//!
//! Each interval gets a lower bound from column generation on the
//! McCormick/RRLT relaxation and an upper bound from coordinate descent over
//! the plans the relaxation uses. Intervals are split until the bounds meet.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::InterdictionPlan;
use crate::instance::Instance;
use crate::lp::{solve_lp, LinearModel, Sense, SolverConfig, VarId};
use crate::master::{column_generation, CgConfig, ColumnPool, IntervalBox};
use crate::risk::{worst_case_cvar_of_flows, RandomizedStrategy, RobustCore, PROB_TOL};
use crate::{Clock, Error, Result};

/// Best mixture over the given plans when the threshold is fixed at `zeta`:
/// returns the worst-case objective and the weights.
pub fn best_mixture_at(flows: &[Vec<f64>], zeta: f64, inst: &Instance, cfg: &SolverConfig) -> Result<(f64, Vec<f64>)> {
    let kk = inst.num_scenarios();
    let mut model = LinearModel::new();
    let core = RobustCore::add_vars(&mut model, kk, zeta, zeta);
    let mut u = Vec::with_capacity(flows.len());
    let mut delta: Vec<Vec<VarId>> = Vec::with_capacity(flows.len());
    for j in 0..flows.len() {
        u.push(model.add_var(format!("u[{j}]"), 0.0, f64::INFINITY, 0.0));
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
                [(delta[j][k], 1.0), (u[j], zeta - f[k])],
                Sense::Ge,
                0.0,
            )?;
        }
    }
    let sol = solve_lp(&model, cfg)?.require_optimal()?;
    Ok((sol.objective, u.iter().map(|&v| sol.value(v).max(0.0)).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub value: f64,
    pub zeta: f64,
    pub u: Vec<f64>,
    pub iterations: usize,
}

/// Alternates between the best threshold in `bx` for fixed weights and the
/// best weights for a fixed threshold, until the second step improves the
/// first by less than a factor `eps`. Every iterate is feasible, so the
/// returned value bounds the interval's optimum from above.
pub fn coordinate_descent(
    flows: &[Vec<f64>],
    u0: &[f64],
    bx: IntervalBox,
    inst: &Instance,
    eps: f64,
    max_iterations: usize,
    cfg: &SolverConfig,
) -> Result<DescentOutcome> {
    if flows.len() != u0.len() || flows.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "descent start weights",
            expected: flows.len(),
            found: u0.len(),
        });
    }
    let total: f64 = u0.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("descent start weights sum to zero".into()));
    }
    let mut u: Vec<f64> = u0.iter().map(|&x| x.max(0.0) / total).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let step1 = worst_case_cvar_of_flows(flows, &u, &inst.amb, inst.risk, (bx.lo(), bx.hi()), cfg)?;
        if flows.len() == 1 || iterations >= max_iterations {
            return Ok(DescentOutcome {
                value: step1.value,
                zeta: step1.zeta,
                u,
                iterations,
            });
        }
        let (t2, u_next) = best_mixture_at(flows, step1.zeta, inst, cfg)?;
        if t2 >= (1.0 - eps) * step1.value - 1e-9 {
            return Ok(DescentOutcome {
                value: step1.value,
                zeta: step1.zeta,
                u,
                iterations,
            });
        }
        u = u_next;
    }
}

/// One interval of the search with its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub id: usize,
    pub depth: usize,
    pub bx: IntervalBox,
    pub lb: f64,
    pub ub: f64,
    /// Threshold attaining `ub`.
    pub zeta_ub: f64,
    /// Plans and weights attaining `ub`.
    pub support: Vec<InterdictionPlan>,
    pub weights: Vec<f64>,
    pub cap_reached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    /// Relative optimality tolerance.
    pub eps: f64,
    pub cg: CgConfig,
    pub max_nodes: usize,
    /// Seconds, measured with the caller's clock.
    pub time_limit: Option<f64>,
    pub descent_iterations: usize,
    /// Number of sub-intervals per branching. Two uses the 0.2/0.8 rule
    /// around the incumbent threshold; more splits evenly.
    pub subintervals: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            cg: CgConfig::default(),
            max_nodes: 10_000,
            time_limit: None,
            descent_iterations: 100,
            subintervals: 2,
        }
    }
}

/// Progress record handed to the observer each time a node is taken off
/// the list.
#[derive(Debug, Clone)]
pub struct NodeReport<'a> {
    pub node: &'a BnbNode,
    pub incumbent: f64,
    pub pool_size: usize,
    pub open_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub nodes_evaluated: usize,
    pub nodes_processed: usize,
    pub columns: usize,
    pub cg_iterations: usize,
    pub descent_iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub strategy: RandomizedStrategy,
    /// Worst-case CVaR of `strategy`.
    pub value: f64,
    /// Certified lower bound on the optimum.
    pub lower_bound: f64,
    pub gap: f64,
    /// Threshold of the incumbent.
    pub zeta: f64,
    pub limit_reached: bool,
    pub stats: SolverStats,
    /// Every node evaluated, in creation order.
    pub nodes: Vec<BnbNode>,
    pub pool: ColumnPool,
}

struct Search<'a> {
    inst: &'a Instance,
    cfg: &'a BnbConfig,
    pool: ColumnPool,
    stats: SolverStats,
    nodes: Vec<BnbNode>,
    incumbent_support: Vec<InterdictionPlan>,
}

impl Search<'_> {
    fn evaluate(&mut self, bx: IntervalBox, depth: usize) -> Result<BnbNode> {
        let cg = column_generation(bx, self.inst, &mut self.pool, &self.cfg.cg, &mut |it| {
            log::trace!(
                "cg it={} pool={} obj={:.9} rc={:.3e} new={:?}",
                it.iteration,
                it.pool_size,
                it.objective,
                it.reduced_cost,
                it.entering.map(|p| p.arcs())
            );
        })?;
        self.stats.cg_iterations += cg.iterations;

        let mut idx: Vec<usize> = (0..self.pool.len()).filter(|&j| cg.master.u[j] > PROB_TOL).collect();
        for plan in &self.incumbent_support {
            if let Some(j) = self.pool.index_of(plan) {
                if !idx.contains(&j) {
                    idx.push(j);
                }
            }
        }
        idx.sort_unstable();
        let flows: Vec<Vec<f64>> = idx.iter().map(|&j| self.pool.flows()[j].clone()).collect();
        let mut u0: Vec<f64> = idx.iter().map(|&j| cg.master.u[j].max(0.0)).collect();
        if u0.iter().sum::<f64>() <= 0.0 {
            u0 = vec![1.0; idx.len()];
        }
        let cd = coordinate_descent(
            &flows,
            &u0,
            bx,
            self.inst,
            self.cfg.eps,
            self.cfg.descent_iterations,
            &self.cfg.cg.lp,
        )?;
        self.stats.descent_iterations += cd.iterations;
        self.stats.nodes_evaluated += 1;
        let node = BnbNode {
            id: self.nodes.len(),
            depth,
            bx,
            lb: cg.bound,
            ub: cd.value,
            zeta_ub: cd.zeta,
            support: idx.iter().map(|&j| self.pool.plans()[j].clone()).collect(),
            weights: cd.u,
            cap_reached: cg.cap_reached,
        };
        log::debug!(
            "node {} [{:.6}, {:.6}] lb={:.9} ub={:.9} pool={}",
            node.id,
            bx.lo(),
            bx.hi(),
            node.lb,
            node.ub,
            self.pool.len()
        );
        self.nodes.push(node.clone());
        Ok(node)
    }

    fn children(&self, bx: IntervalBox, zeta_hat: Option<f64>) -> Vec<IntervalBox> {
        let n = self.cfg.subintervals.max(2);
        if n == 2 {
            let p = match zeta_hat {
                None => 0.5,
                Some(z) if z - bx.lo() < bx.hi() - z => 0.2,
                Some(_) => 0.8,
            };
            let (a, b) = bx.split(p);
            return vec![a, b];
        }
        let step = bx.width() / n as f64;
        (0..n)
            .map(|i| {
                let lo = bx.lo() + step * i as f64;
                let hi = if i + 1 == n { bx.hi() } else { lo + step };
                IntervalBox::new(lo, hi).expect("sub-interval of a valid interval")
            })
            .collect()
    }
}

fn relative_gap(ub: f64, lb: f64) -> f64 {
    ((ub - lb) / ub.abs().max(1.0)).max(0.0)
}

/// Minimizes the worst-case CVaR over randomized strategies.
///
/// Nodes are processed in order of lower bound (ties: smaller left end).
/// A node's upper bound replaces the incumbent when strictly better; nodes
/// whose lower bound reaches the incumbent are dropped; a node is split
/// while its upper bound exceeds `(1 + eps)` times its lower bound. The
/// final strategy is read from the relaxation at the incumbent threshold,
/// which is exact there, and then evaluated exactly.
pub fn spatial_bnb(
    inst: &Instance,
    cfg: &BnbConfig,
    clock: &dyn Clock,
    observer: &mut dyn FnMut(&NodeReport<'_>),
) -> Result<SolverResult> {
    if !(cfg.eps > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", cfg.eps)));
    }
    let start = clock.elapsed_secs();
    let zeta_bar = inst.zeta_bar();
    let mut s = Search {
        inst,
        cfg,
        pool: ColumnPool::new(inst)?,
        stats: SolverStats::default(),
        nodes: Vec::new(),
        incumbent_support: Vec::new(),
    };

    let mut open = vec![s.evaluate(IntervalBox::new(0.0, zeta_bar)?, 0)?];
    let mut best_ub = f64::INFINITY;
    let mut zeta_hat: Option<f64> = None;
    let mut closed_lb = f64::INFINITY;
    let mut limit_reached = false;
    let tiny = 1e-12 * (1.0 + zeta_bar);

    while !open.is_empty() {
        let out_of_time = cfg.time_limit.is_some_and(|t| clock.elapsed_secs() - start >= t);
        if zeta_hat.is_some() && (s.stats.nodes_evaluated >= cfg.max_nodes || out_of_time) {
            limit_reached = true;
            break;
        }
        open.sort_by(|a, b| a.lb.total_cmp(&b.lb).then(a.bx.lo().total_cmp(&b.bx.lo())));
        let node = open.remove(0);
        s.stats.nodes_processed += 1;
        if node.ub < best_ub {
            best_ub = node.ub;
            zeta_hat = Some(node.zeta_ub);
            s.incumbent_support = node
                .support
                .iter()
                .zip(&node.weights)
                .filter(|(_, &w)| w > PROB_TOL)
                .map(|(p, _)| p.clone())
                .collect();
        }
        open.retain(|n| n.lb < best_ub);
        observer(&NodeReport {
            node: &node,
            incumbent: best_ub,
            pool_size: s.pool.len(),
            open_nodes: open.len(),
        });
        if node.lb >= best_ub {
            continue;
        }
        if node.ub > (1.0 + cfg.eps) * node.lb && node.bx.width() > tiny {
            for bx in s.children(node.bx, zeta_hat) {
                open.push(s.evaluate(bx, node.depth + 1)?);
            }
        } else {
            closed_lb = closed_lb.min(node.lb);
        }
    }

    let open_lb = open.iter().map(|n| n.lb).fold(f64::INFINITY, f64::min);
    let lower_bound = open_lb.min(closed_lb).min(best_ub);
    let zeta = zeta_hat.expect("root node always yields an incumbent");

    // Exact at a single threshold; pricing certifies the pool there.
    let point = IntervalBox::point(zeta)?;
    let at_point = column_generation(point, inst, &mut s.pool, &cfg.cg, &mut |_| {})?;
    s.stats.cg_iterations += at_point.iterations;
    let strategy = RandomizedStrategy::from_weights(s.pool.plans(), &at_point.master.u)?;
    let flows: Vec<Vec<f64>> = strategy
        .support()
        .iter()
        .map(|p| s.pool.flows()[s.pool.index_of(p).expect("support comes from the pool")].clone())
        .collect();
    let exact = worst_case_cvar_of_flows(&flows, strategy.probs(), &inst.amb, inst.risk, (0.0, zeta_bar), &cfg.cg.lp)?;

    s.stats.columns = s.pool.len();
    s.stats.seconds = clock.elapsed_secs() - start;
    let lower_bound = lower_bound.min(exact.value);
    Ok(SolverResult {
        gap: relative_gap(exact.value, lower_bound),
        value: exact.value,
        lower_bound,
        zeta,
        strategy,
        limit_reached,
        stats: s.stats,
        nodes: s.nodes,
        pool: s.pool,
    })
}
