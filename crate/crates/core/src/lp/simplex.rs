//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a logical variable `s_i` so that `a_i·x + s_i = b_i`,
//! with `s_i ∈ [0, ∞)` for `≤`, `(-∞, 0]` for `≥` and `{0}` for `=` rows.
//! Phase one minimizes the sum of bound violations of the basic variables
//! starting from any basis, which also serves warm starts after bound
//! changes.

use alloc::vec;
use alloc::vec::Vec;

use super::lu::{Factorization, SparseCol};
use super::{Basis, BasisStatus, LinearModel, LpSolution, LpStatus, Sense, SolverConfig};
use crate::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const MAX_REPAIRS: usize = 25;
const MAX_ROUNDS: usize = 8;
const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded { entering: usize, dir: f64 },
    /// Drift or a basis repair made the basis primal infeasible again.
    LostFeasibility,
}

pub(crate) struct Simplex<'a> {
    cfg: &'a SolverConfig,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    rhs: Vec<f64>,
    offset: f64,
    x: Vec<f64>,
    state: Vec<BasisStatus>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    factor: Factorization,
    iterations: usize,
    repairs: usize,
    degenerate_run: usize,
    bland: bool,
    work: Vec<f64>,
    scratch: Vec<f64>,
    alpha: Vec<f64>,
}

impl<'a> Simplex<'a> {
    pub fn new(model: &LinearModel, bounds: Option<&[(f64, f64)]>, cfg: &'a SolverConfig) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let total = n + m;

        let mut counts = vec![0usize; n];
        for c in model.constraints() {
            for &(v, _) in &c.coeffs {
                counts[v.0] += 1;
            }
        }
        let mut col_start = Vec::with_capacity(total + 1);
        col_start.push(0);
        for j in 0..n {
            col_start.push(col_start[j] + counts[j]);
        }
        let nnz = col_start[n];
        let mut col_rows = vec![0usize; nnz + m];
        let mut col_vals = vec![0.0f64; nnz + m];
        let mut fill = col_start[..n].to_vec();
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.coeffs {
                col_rows[fill[v.0]] = i;
                col_vals[fill[v.0]] = a;
                fill[v.0] += 1;
            }
        }
        for i in 0..m {
            col_rows[nnz + i] = i;
            col_vals[nnz + i] = 1.0;
            col_start.push(nnz + i + 1);
        }

        let mut cost = vec![0.0; total];
        let mut lo = vec![0.0; total];
        let mut up = vec![0.0; total];
        for (j, v) in model.vars().iter().enumerate() {
            cost[j] = v.objective;
            let (l, u) = bounds.map_or((v.lower, v.upper), |b| b[j]);
            lo[j] = l;
            up[j] = u;
        }
        let mut rhs = vec![0.0; m];
        for (i, c) in model.constraints().iter().enumerate() {
            rhs[i] = c.rhs;
            let (l, u) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo[n + i] = l;
            up[n + i] = u;
        }

        Simplex {
            cfg,
            m,
            n,
            col_start,
            col_rows,
            col_vals,
            cost,
            lo,
            up,
            rhs,
            offset: model.offset(),
            x: vec![0.0; total],
            state: vec![BasisStatus::AtLower; total],
            basis: Vec::with_capacity(m),
            pos_of: vec![NONE; total],
            factor: Factorization::default(),
            iterations: 0,
            repairs: 0,
            degenerate_run: 0,
            bland: false,
            work: vec![0.0; m],
            scratch: vec![0.0; m],
            alpha: vec![0.0; m],
        }
    }

    fn column(&self, j: usize) -> SparseCol<'_> {
        let (s, e) = (self.col_start[j], self.col_start[j + 1]);
        SparseCol {
            rows: &self.col_rows[s..e],
            vals: &self.col_vals[s..e],
        }
    }

    fn default_status(&self, j: usize) -> BasisStatus {
        if self.lo[j].is_finite() {
            BasisStatus::AtLower
        } else if self.up[j].is_finite() {
            BasisStatus::AtUpper
        } else {
            BasisStatus::Free
        }
    }

    /// Status for a variable leaving the basis at value `v`.
    fn nearest_status(&self, j: usize, v: f64) -> BasisStatus {
        match (self.lo[j].is_finite(), self.up[j].is_finite()) {
            (true, true) => {
                if (v - self.lo[j]).abs() <= (self.up[j] - v).abs() {
                    BasisStatus::AtLower
                } else {
                    BasisStatus::AtUpper
                }
            }
            (true, false) => BasisStatus::AtLower,
            (false, true) => BasisStatus::AtUpper,
            (false, false) => BasisStatus::Free,
        }
    }

    fn set_nonbasic(&mut self, j: usize, status: BasisStatus) {
        self.state[j] = status;
        self.pos_of[j] = NONE;
        self.x[j] = match status {
            BasisStatus::AtLower => self.lo[j],
            BasisStatus::AtUpper => self.up[j],
            _ => 0.0,
        };
    }

    fn install(&mut self, warm: Option<&Basis>) {
        let (n, m) = (self.n, self.m);
        let mut basic: Vec<usize> = Vec::with_capacity(m);
        for j in 0..n + m {
            let hinted = warm.and_then(|b| {
                if j < n {
                    b.vars.get(j).copied()
                } else {
                    b.rows.get(j - n).copied()
                }
            });
            let status = match hinted {
                Some(BasisStatus::Basic) => BasisStatus::Basic,
                Some(BasisStatus::AtLower) if self.lo[j].is_finite() => BasisStatus::AtLower,
                Some(BasisStatus::AtUpper) if self.up[j].is_finite() => BasisStatus::AtUpper,
                Some(_) => self.default_status(j),
                None if j >= n => BasisStatus::Basic,
                None => self.default_status(j),
            };
            if status == BasisStatus::Basic {
                basic.push(j);
            } else {
                self.set_nonbasic(j, status);
            }
        }
        if basic.len() > m {
            for &j in &basic[m..] {
                let s = self.default_status(j);
                self.set_nonbasic(j, s);
            }
            basic.truncate(m);
        }
        if basic.len() < m {
            // Pad with logicals; factorization repairs any dependence.
            let mut have = vec![false; m];
            for &j in &basic {
                if j >= n {
                    have[j - n] = true;
                }
            }
            for i in 0..m {
                if basic.len() == m {
                    break;
                }
                if !have[i] {
                    basic.push(n + i);
                }
            }
        }
        for (p, &j) in basic.iter().enumerate() {
            self.state[j] = BasisStatus::Basic;
            self.pos_of[j] = p;
        }
        self.basis = basic;
    }

    fn refactor(&mut self) -> Result<()> {
        let outcome = {
            let cols: Vec<SparseCol<'_>> = self.basis.iter().map(|&j| self.column(j)).collect();
            Factorization::factorize(self.m, &cols)
        };
        if !outcome.rejected.is_empty() {
            self.repairs += 1;
            if self.repairs > MAX_REPAIRS {
                return Err(Error::NumericallyUnstable("basis repeatedly singular"));
            }
            for (&pos, &row) in outcome.rejected.iter().zip(&outcome.replacement_rows) {
                let out = self.basis[pos];
                let s = self.nearest_status(out, self.x[out]);
                self.set_nonbasic(out, s);
                let slack = self.n + row;
                self.basis[pos] = slack;
                self.state[slack] = BasisStatus::Basic;
                self.pos_of[slack] = pos;
            }
        }
        self.factor = outcome.factor;
        self.compute_basic_values();
        Ok(())
    }

    fn compute_basic_values(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n + self.m {
            if self.state[j] == BasisStatus::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            let col = self.column(j);
            for (&i, &a) in col.rows.iter().zip(col.vals) {
                r[i] -= a * xj;
            }
        }
        self.factor.ftran(&mut r, &mut self.scratch);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = r[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.cfg.feasibility_tol;
        if self.x[j] < self.lo[j] - tol {
            -1.0
        } else if self.x[j] > self.up[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basis.iter().all(|&j| self.infeasibility(j) == 0.0)
    }

    /// Dual vector for the given phase, written into `self.work`.
    fn compute_duals(&mut self, phase: Phase) -> bool {
        let mut any = false;
        for p in 0..self.m {
            let j = self.basis[p];
            self.work[p] = match phase {
                Phase::Two => self.cost[j],
                Phase::One => {
                    let c = self.infeasibility(j);
                    any |= c != 0.0;
                    c
                }
            };
        }
        self.factor.btran(&mut self.work, &mut self.scratch);
        any
    }

    fn reduced_cost(&self, j: usize, phase: Phase) -> f64 {
        let mut d = if phase == Phase::Two { self.cost[j] } else { 0.0 };
        let col = self.column(j);
        for (&i, &a) in col.rows.iter().zip(col.vals) {
            d -= self.work[i] * a;
        }
        d
    }

    /// Picks an entering variable and its direction of motion.
    fn price(&self, phase: Phase) -> Option<(usize, f64)> {
        let tol = self.cfg.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if st == BasisStatus::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.reduced_cost(j, phase);
            let dir = match st {
                BasisStatus::AtLower if d < -tol => 1.0,
                BasisStatus::AtUpper if d > tol => -1.0,
                BasisStatus::Free if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn load_alpha(&mut self, q: usize) {
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        let (s, e) = (self.col_start[q], self.col_start[q + 1]);
        for k in s..e {
            self.alpha[self.col_rows[k]] += self.col_vals[k];
        }
        self.factor.ftran(&mut self.alpha, &mut self.scratch);
    }

    /// Target bound for basic variable `j` moving with rate `delta`, or
    /// `None` if the motion is unrestricted.
    fn blocking_bound(&self, j: usize, delta: f64, phase: Phase) -> Option<f64> {
        let infeas = if phase == Phase::One { self.infeasibility(j) } else { 0.0 };
        if delta < 0.0 {
            match infeas {
                x if x > 0.0 => Some(self.up[j]),
                x if x < 0.0 => None,
                _ => self.lo[j].is_finite().then_some(self.lo[j]),
            }
        } else {
            match infeas {
                x if x < 0.0 => Some(self.lo[j]),
                x if x > 0.0 => None,
                _ => self.up[j].is_finite().then_some(self.up[j]),
            }
        }
    }

    /// Harris two-pass ratio test. Returns `(step, leaving position)`; a
    /// `None` position means a bound flip of the entering variable, and an
    /// infinite step means the direction is unbounded.
    fn ratio_test(&self, q: usize, dir: f64, phase: Phase) -> (f64, Option<(usize, f64)>) {
        let tol = self.cfg.feasibility_tol;
        let flip = self.up[q] - self.lo[q];
        let mut relaxed = f64::INFINITY;
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -dir * a;
            let j = self.basis[p];
            if let Some(b) = self.blocking_bound(j, delta, phase) {
                let r = if delta < 0.0 {
                    (self.x[j] - (b - tol)) / -delta
                } else {
                    ((b + tol) - self.x[j]) / delta
                };
                relaxed = relaxed.min(r.max(0.0));
            }
        }
        if flip <= relaxed && flip.is_finite() {
            return (flip, None);
        }
        if relaxed == f64::INFINITY {
            return (f64::INFINITY, None);
        }
        let mut leave: Option<(usize, f64)> = None;
        let mut step = 0.0;
        let mut best_pivot = 0.0;
        let mut best_ratio = f64::INFINITY;
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -dir * a;
            let j = self.basis[p];
            let Some(b) = self.blocking_bound(j, delta, phase) else {
                continue;
            };
            let r = ((b - self.x[j]) / delta).max(0.0);
            if self.bland {
                let better = r < best_ratio - 1e-12
                    || (r <= best_ratio + 1e-12 && leave.is_some_and(|(l, _)| j < self.basis[l]));
                if better || leave.is_none() {
                    best_ratio = r;
                    leave = Some((p, b));
                    step = r;
                }
            } else if r <= relaxed {
                let better = a.abs() > best_pivot
                    || (a.abs() == best_pivot && leave.is_some_and(|(l, _)| j < self.basis[l]));
                if better {
                    best_pivot = a.abs();
                    leave = Some((p, b));
                    step = r;
                }
            }
        }
        (step, leave)
    }

    fn iterate(&mut self, phase: Phase) -> Result<Outcome> {
        let mut fresh = false;
        loop {
            if self.factor.num_etas() >= REFACTOR_EVERY {
                self.refactor()?;
                fresh = true;
                if phase == Phase::Two && !self.primal_feasible() {
                    return Ok(Outcome::LostFeasibility);
                }
            }
            let any_infeasible = self.compute_duals(phase);
            if phase == Phase::One && !any_infeasible {
                return Ok(Outcome::Optimal);
            }
            let Some((q, dir)) = self.price(phase) else {
                return Ok(match phase {
                    Phase::One => Outcome::Infeasible,
                    Phase::Two => Outcome::Optimal,
                });
            };
            self.load_alpha(q);
            let (step, leave) = self.ratio_test(q, dir, phase);
            if step == f64::INFINITY {
                if phase == Phase::Two {
                    return Ok(Outcome::Unbounded { entering: q, dir });
                }
                // Phase one cannot be unbounded; blame accumulated error once.
                if fresh {
                    return Err(Error::NumericallyUnstable("unbounded phase-one direction"));
                }
                self.refactor()?;
                fresh = true;
                continue;
            }

            self.iterations += 1;
            if self.iterations > self.cfg.max_iterations {
                return Err(Error::IterationLimit(self.cfg.max_iterations));
            }
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run > self.cfg.bland_after {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            fresh = false;

            self.x[q] += dir * step;
            for p in 0..self.m {
                let a = self.alpha[p];
                if a != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= dir * a * step;
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 {
                        BasisStatus::AtUpper
                    } else {
                        BasisStatus::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                }
                Some((p, bound)) => {
                    let out = self.basis[p];
                    self.x[out] = bound;
                    let st = if self.lo[out] == self.up[out] || bound == self.lo[out] {
                        BasisStatus::AtLower
                    } else {
                        BasisStatus::AtUpper
                    };
                    self.state[out] = st;
                    self.pos_of[out] = NONE;
                    self.basis[p] = q;
                    self.state[q] = BasisStatus::Basic;
                    self.pos_of[q] = p;
                    self.factor.push_eta(p, &self.alpha);
                }
            }
        }
    }

    pub fn solve(mut self, warm: Option<&Basis>) -> Result<LpSolution> {
        self.install(warm);
        self.refactor()?;
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > MAX_ROUNDS {
                return Err(Error::NumericallyUnstable("simplex failed to settle"));
            }
            match self.iterate(Phase::One)? {
                Outcome::Infeasible => {
                    // Confirm on a fresh factorization before declaring it.
                    self.refactor()?;
                    if matches!(self.iterate(Phase::One)?, Outcome::Infeasible) {
                        self.compute_duals(Phase::One);
                        let farkas = self.work.clone();
                        return Ok(self.finish(LpStatus::Infeasible, Some(farkas)));
                    }
                    continue;
                }
                _ => {}
            }
            match self.iterate(Phase::Two)? {
                Outcome::LostFeasibility => continue,
                Outcome::Unbounded { entering, dir } => {
                    let mut ray = vec![0.0; self.n];
                    if entering < self.n {
                        ray[entering] = dir;
                    }
                    for p in 0..self.m {
                        let j = self.basis[p];
                        if j < self.n {
                            ray[j] = -dir * self.alpha[p];
                        }
                    }
                    return Ok(self.finish(LpStatus::Unbounded, Some(ray)));
                }
                _ => {}
            }
            self.refactor()?;
            if !self.primal_feasible() {
                continue;
            }
            let before = self.iterations;
            match self.iterate(Phase::Two)? {
                Outcome::Optimal if self.iterations == before => break,
                _ => continue,
            }
        }
        self.compute_duals(Phase::Two);
        Ok(self.finish(LpStatus::Optimal, None))
    }

    fn finish(self, status: LpStatus, certificate: Option<Vec<f64>>) -> LpSolution {
        let n = self.n;
        let primal: Vec<f64> = self.x[..n].to_vec();
        let objective = self.offset + primal.iter().zip(&self.cost).map(|(x, c)| x * c).sum::<f64>();
        let duals = if status == LpStatus::Optimal {
            self.work.clone()
        } else {
            vec![0.0; self.m]
        };
        LpSolution {
            status,
            objective,
            primal,
            duals,
            basis: Basis {
                vars: self.state[..n].to_vec(),
                rows: self.state[n..].to_vec(),
            },
            certificate,
            iterations: self.iterations,
        }
    }
}
