//! Best-bound branch-and-bound over integer-restricted variables.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{solve_lp_with_bounds, Basis, LinearModel, LpStatus, SolverConfig, VarId};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped at the node limit; `values` holds the best integer point
    /// found, if any.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Best integer-feasible point, empty when none was found.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Proven lower bound on the optimal objective.
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
}

impl MipSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn has_solution(&self) -> bool {
        !self.values.is_empty()
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    bounds: Vec<(f64, f64)>,
    primal: Vec<f64>,
    basis: Basis,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: the smallest bound pops first, then the deepest, then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn gap(ub: f64, lb: f64) -> f64 {
    if ub == f64::INFINITY {
        f64::INFINITY
    } else {
        ((ub - lb) / ub.abs().max(1.0)).max(0.0)
    }
}

/// Minimizes `model` with the listed variables restricted to integer values
/// (binaries in practice). Branches on the most fractional variable, lowest
/// index first on ties, and warm-starts each child from its parent's basis.
pub fn solve_mip(model: &LinearModel, integers: &[VarId], cfg: &SolverConfig) -> Result<MipSolution> {
    model.check_well_formed()?;
    let mut bounds: Vec<(f64, f64)> = model.vars().iter().map(|v| (v.lower, v.upper)).collect();
    for &v in integers {
        let (l, u) = bounds[v.0];
        bounds[v.0] = (libm::ceil(l - cfg.integrality_tol), libm::floor(u + cfg.integrality_tol));
    }

    let root = solve_lp_with_bounds(model, &bounds, cfg, None)?;
    match root.status {
        LpStatus::Infeasible => {
            return Ok(MipSolution {
                status: MipStatus::Infeasible,
                values: Vec::new(),
                objective: f64::INFINITY,
                bound: f64::INFINITY,
                gap: 0.0,
                nodes: 1,
            })
        }
        LpStatus::Unbounded => {
            return Ok(MipSolution {
                status: MipStatus::Unbounded,
                values: Vec::new(),
                objective: f64::NEG_INFINITY,
                bound: f64::NEG_INFINITY,
                gap: f64::INFINITY,
                nodes: 1,
            })
        }
        LpStatus::Optimal => {}
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: root.objective,
        depth: 0,
        seq,
        bounds,
        primal: root.primal,
        basis: root.basis,
    });

    let mut incumbent: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    let mut nodes = 1usize;
    let mut hit_limit = false;

    while let Some(node) = heap.pop() {
        if node.bound >= best - cfg.mip_gap * best.abs().max(1.0) {
            // Everything left is at least as bad.
            heap.clear();
            break;
        }
        let mut branch: Option<(VarId, f64)> = None;
        let mut best_frac = 0.0;
        for &v in integers {
            let x = node.primal[v.0];
            let f = x - libm::floor(x);
            let dist = f.min(1.0 - f);
            if dist > cfg.integrality_tol && dist > best_frac {
                best_frac = dist;
                branch = Some((v, x));
            }
        }
        let Some((v, x)) = branch else {
            let mut values = node.primal;
            for &v in integers {
                values[v.0] = libm::round(values[v.0]);
            }
            best = model.objective_value(&values);
            incumbent = values;
            continue;
        };
        if nodes >= cfg.max_mip_nodes {
            heap.push(node);
            hit_limit = true;
            break;
        }
        for down in [true, false] {
            let mut child = node.bounds.clone();
            if down {
                child[v.0].1 = libm::floor(x);
            } else {
                child[v.0].0 = libm::ceil(x);
            }
            if child[v.0].0 > child[v.0].1 {
                continue;
            }
            nodes += 1;
            let sol = solve_lp_with_bounds(model, &child, cfg, Some(&node.basis))?;
            if sol.status != LpStatus::Optimal || sol.objective >= best {
                continue;
            }
            seq += 1;
            heap.push(Node {
                bound: sol.objective.max(node.bound),
                depth: node.depth + 1,
                seq,
                bounds: child,
                primal: sol.primal,
                basis: sol.basis,
            });
        }
    }

    let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let bound = open.min(best);
    let status = if hit_limit {
        MipStatus::NodeLimit
    } else if incumbent.is_empty() {
        MipStatus::Infeasible
    } else {
        MipStatus::Optimal
    };
    Ok(MipSolution {
        status,
        gap: gap(best, bound),
        values: incumbent,
        objective: best,
        bound,
        nodes,
    })
}
