//! Linear and mixed-binary programming kernel.
//!
//! Models are always minimizations. Every constraint carries a unique name,
//! and the dual value of a constraint is reported as the shadow price
//! `∂ objective / ∂ rhs`. For a minimization this makes the dual of a `≤`
//! row non-positive and the dual of a `≥` row non-negative; equality rows
//! use the same convention, so writing `a·x = b` as the pair `a·x ≤ b`,
//! `-a·x ≤ -b` with non-negative multipliers `ψ⁺, ψ⁻` gives
//! `dual = -(ψ⁺ - ψ⁻)`.

mod lp_format;
mod lu;
mod mip;
mod simplex;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use lp_format::write_lp;
pub use mip::{solve_mip, MipSolution, MipStatus};

/// Index of a variable inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of a constraint inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem `min c·x + offset` over bounded variables and named
/// linear rows.
#[derive(Debug, Clone, Default)]
pub struct LinearModel {
    vars: Vec<Variable>,
    cons: Vec<Constraint>,
    offset: f64,
    names: BTreeMap<String, usize>,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        debug_assert!(lower <= upper, "variable bounds out of order");
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            objective,
        });
        VarId(self.vars.len() - 1)
    }

    /// Adds a row. Duplicate coefficients for one variable are summed.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConId> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        let mut row: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in coeffs {
            if v.0 >= self.vars.len() {
                return Err(Error::InvalidInput(alloc::format!(
                    "constraint `{name}` references undeclared variable {}",
                    v.0
                )));
            }
            if a != 0.0 {
                row.push((v, a));
            }
        }
        row.sort_by_key(|&(v, _)| v);
        row.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        row.retain(|&(_, a)| a != 0.0);
        let id = self.cons.len();
        self.names.insert(name.clone(), id);
        self.cons.push(Constraint {
            name,
            coeffs: row,
            sense,
            rhs,
        });
        Ok(ConId(id))
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        let var = &mut self.vars[v.0];
        var.lower = lower;
        var.upper = upper;
    }

    pub fn set_objective(&mut self, v: VarId, objective: f64) {
        self.vars[v.0].objective = objective;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn constraint(&self, c: ConId) -> &Constraint {
        &self.cons[c.0]
    }

    pub fn con_id(&self, name: &str) -> Option<ConId> {
        self.names.get(name).map(|&i| ConId(i))
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.cons.len()
    }

    /// Objective value of `x`, offset included.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset + self.vars.iter().zip(x).map(|(v, xi)| v.objective * xi).sum::<f64>()
    }

    /// Largest violation of any bound or row at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for c in &self.cons {
            let lhs = row_activity(&c.coeffs, x);
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub(crate) fn check_well_formed(&self) -> Result<()> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.objective.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidInput(alloc::format!(
                    "variable `{}` has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        for c in &self.cons {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|(_, a)| !a.is_finite()) {
                return Err(Error::InvalidInput(alloc::format!(
                    "constraint `{}` has non-finite data",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn row_activity(coeffs: &[(VarId, f64)], x: &[f64]) -> f64 {
    coeffs.iter().map(|&(v, a)| a * x[v.0]).sum()
}

/// Tolerances shared by every solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    pub mip_gap: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iterations: usize,
    pub max_mip_nodes: usize,
    /// Re-check primal/dual feasibility and duality of every optimal solve
    /// and fail with [`Error::NumericallyUnstable`] when they do not hold.
    pub verify: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            integrality_tol: 1e-6,
            mip_gap: 1e-6,
            bland_after: 1000,
            max_iterations: 200_000,
            max_mip_nodes: 200_000,
            verify: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    Free,
}

/// Final simplex basis; can seed a later solve of a model that extends this
/// one (same leading variables and constraints).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basis {
    pub vars: Vec<BasisStatus>,
    pub rows: Vec<BasisStatus>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective including the model offset. Meaningful when optimal.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One dual per constraint, shadow-price convention.
    pub duals: Vec<f64>,
    pub basis: Basis,
    /// Farkas multipliers per row when infeasible, an improving primal ray
    /// when unbounded.
    pub certificate: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, c: ConId) -> f64 {
        self.duals[c.0]
    }

    pub fn dual_by_name(&self, model: &LinearModel, name: &str) -> Option<f64> {
        model.con_id(name).map(|c| self.duals[c.0])
    }

    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            s => Err(Error::NotOptimal(s)),
        }
    }
}

/// Solves the linear relaxation of `model` from the slack basis.
pub fn solve_lp(model: &LinearModel, cfg: &SolverConfig) -> Result<LpSolution> {
    solve_lp_warm(model, cfg, None)
}

/// Solves `model` starting from `warm` when given. `warm` may describe a
/// prefix of the model; missing variables start nonbasic and missing rows
/// start with a basic slack.
pub fn solve_lp_warm(model: &LinearModel, cfg: &SolverConfig, warm: Option<&Basis>) -> Result<LpSolution> {
    model.check_well_formed()?;
    let sol = simplex::Simplex::new(model, None, cfg).solve(warm)?;
    if cfg.verify && sol.status == LpStatus::Optimal {
        verify_optimality(model, &sol, cfg).map_err(|_| Error::NumericallyUnstable("KKT check failed"))?;
    }
    Ok(sol)
}

pub(crate) fn solve_lp_with_bounds(
    model: &LinearModel,
    bounds: &[(f64, f64)],
    cfg: &SolverConfig,
    warm: Option<&Basis>,
) -> Result<LpSolution> {
    simplex::Simplex::new(model, Some(bounds), cfg).solve(warm)
}

/// Measured KKT residuals of an optimal solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl KktReport {
    pub fn duality_gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs() / (1.0 + self.primal_objective.abs())
    }
}

/// Recomputes primal feasibility, dual feasibility, complementary slackness
/// and the duality gap of `sol` from the model data alone.
pub fn kkt_report(model: &LinearModel, sol: &LpSolution) -> KktReport {
    let x = &sol.primal;
    let y = &sol.duals;
    let primal_infeasibility = model.max_violation(x);
    let mut reduced: Vec<f64> = model.vars.iter().map(|v| v.objective).collect();
    let mut dual_inf = 0.0f64;
    let mut compl = 0.0f64;
    let mut dual_obj = model.offset;
    for (c, &yi) in model.cons.iter().zip(y) {
        for &(v, a) in &c.coeffs {
            reduced[v.0] -= yi * a;
        }
        match c.sense {
            Sense::Le => dual_inf = dual_inf.max(yi),
            Sense::Ge => dual_inf = dual_inf.max(-yi),
            Sense::Eq => {}
        }
        let slack = c.rhs - row_activity(&c.coeffs, x);
        compl = compl.max((yi * slack).abs());
        dual_obj += yi * c.rhs;
    }
    for (v, (&d, &xi)) in model.vars.iter().zip(reduced.iter().zip(x)) {
        let at_lower = v.lower.is_finite() && (xi - v.lower).abs() <= 1e-7 * (1.0 + v.lower.abs());
        let at_upper = v.upper.is_finite() && (xi - v.upper).abs() <= 1e-7 * (1.0 + v.upper.abs());
        let viol = match (at_lower, at_upper) {
            (true, true) => 0.0,
            (true, false) => (-d).max(0.0),
            (false, true) => d.max(0.0),
            (false, false) => d.abs(),
        };
        dual_inf = dual_inf.max(viol);
        // Split the reduced cost into bound multipliers for the dual objective.
        if d > 0.0 && v.lower.is_finite() {
            dual_obj += d * v.lower;
            compl = compl.max((d * (xi - v.lower)).abs());
        } else if d < 0.0 && v.upper.is_finite() {
            dual_obj += d * v.upper;
            compl = compl.max((d * (xi - v.upper)).abs());
        } else {
            dual_obj += d * xi;
        }
    }
    KktReport {
        primal_infeasibility,
        dual_infeasibility: dual_inf,
        complementarity: compl,
        primal_objective: model.objective_value(x),
        dual_objective: dual_obj,
    }
}

/// Checks an optimal solution against the tolerances of the LP contract:
/// primal and dual feasibility within 1e-7 (scaled by the data), complementary
/// slackness within 1e-6 and a relative duality gap within 1e-6.
pub fn verify_optimality(model: &LinearModel, sol: &LpSolution, cfg: &SolverConfig) -> Result<KktReport, KktReport> {
    let r = kkt_report(model, sol);
    let scale = 1.0 + sol.primal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ok = r.primal_infeasibility <= cfg.feasibility_tol * scale
        && r.dual_infeasibility <= cfg.optimality_tol * scale
        && r.complementarity <= 1e-6 * scale
        && r.duality_gap() <= 1e-6;
    if ok {
        Ok(r)
    } else {
        Err(r)
    }
}
