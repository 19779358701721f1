//! Lower bounds over a threshold interval: the McCormick/RRLT relaxation of
//! the bilinear terms `η_ℓ = u_ℓ ζ`, solved by column generation over
//! interdiction plans.
//!
//! Dual values use the nonnegative multipliers of the relaxation:
//! `φ_k` for the epigraph rows, `p` for `Σu = 1` and `π` for `Ση = ζ`. The
//! reduced cost of a plan outside the pool is
//!
//! ```text
//! min_{η∈[ζ_lb, ζ_ub]}  Σ_k φ_k [f_{ℓ,k} − η]⁺ / (1−α) + p + π η,
//! ```
//!
//! which the pricing MILP minimizes over all plans at once.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{enumerate_plans, flow_vector, InterdictionPlan};
use crate::instance::Instance;
use crate::lp::{
    solve_lp_warm, solve_mip, Basis, ConId, LinearModel, MipStatus, Sense, SolverConfig, VarId,
};
use crate::risk::{RiskSpec, RobustCore};
use crate::{Error, Result};

/// Closed threshold interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBox {
    lo: f64,
    hi: f64,
}

impl IntervalBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidInput(format!("invalid threshold interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(z: f64) -> Result<Self> {
        Self::new(z, z)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    /// Splits at `lo + p (hi − lo)`.
    pub fn split(&self, p: f64) -> (Self, Self) {
        let mid = (self.lo + p * (self.hi - self.lo)).clamp(self.lo, self.hi);
        (Self { lo: self.lo, hi: mid }, Self { lo: mid, hi: self.hi })
    }
}

/// Plans generated so far with their flow vectors. Starts with the empty
/// plan and persists across intervals; it also remembers the last master
/// basis for warm starts.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    plans: Vec<InterdictionPlan>,
    flows: Vec<Vec<f64>>,
    basis: Option<Basis>,
}

impl ColumnPool {
    pub fn new(inst: &Instance) -> Result<Self> {
        let mut pool = Self::default();
        pool.add(inst, InterdictionPlan::empty())?;
        Ok(pool)
    }

    /// Adds `plan` unless already present; returns whether it was new.
    pub fn add(&mut self, inst: &Instance, plan: InterdictionPlan) -> Result<bool> {
        if self.contains(&plan) {
            return Ok(false);
        }
        if !plan.within_budget(inst.budget) {
            return Err(Error::InvalidInput(format!("plan {:?} exceeds the budget", plan.arcs())));
        }
        self.flows.push(flow_vector(&inst.net, &inst.scenarios, &plan)?);
        self.plans.push(plan);
        Ok(true)
    }

    pub fn contains(&self, plan: &InterdictionPlan) -> bool {
        self.plans.contains(plan)
    }

    pub fn index_of(&self, plan: &InterdictionPlan) -> Option<usize> {
        self.plans.iter().position(|p| p == plan)
    }

    pub fn plans(&self) -> &[InterdictionPlan] {
        &self.plans
    }

    pub fn flows(&self) -> &[Vec<f64>] {
        &self.flows
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }
}

/// Nonnegative dual multipliers that drive pricing.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterDuals {
    pub phi: Vec<f64>,
    pub p: f64,
    pub pi: f64,
}

/// The restricted master LP with handles to its variables and rows.
#[derive(Debug, Clone)]
pub struct MasterModel {
    pub model: LinearModel,
    pub u: Vec<VarId>,
    pub eta: Vec<VarId>,
    pub zeta: VarId,
    pub epigraph: Vec<ConId>,
    pub sum_u: ConId,
    pub rrlt: ConId,
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub objective: f64,
    /// Weight of each pool plan, in pool order.
    pub u: Vec<f64>,
    pub eta: Vec<f64>,
    pub zeta: f64,
    pub duals: MasterDuals,
    pub primal: Vec<f64>,
    pub basis: Basis,
}

/// Builds the relaxation over the pool's plans with `ζ` confined to `bx`.
///
/// Variables come first for the shared part and then in one block per plan,
/// and rows likewise, so the model for a larger pool extends the model for a
/// smaller one and old bases stay usable.
pub fn build_master(pool: &ColumnPool, bx: IntervalBox, inst: &Instance) -> Result<MasterModel> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("column pool is empty".into()));
    }
    let kk = inst.num_scenarios();
    let (a, b) = (bx.lo(), bx.hi());
    let mut model = LinearModel::new();
    let core = RobustCore::add_vars(&mut model, kk, a, b);
    let mut u = Vec::with_capacity(pool.len());
    let mut eta = Vec::with_capacity(pool.len());
    let mut delta: Vec<Vec<VarId>> = Vec::with_capacity(pool.len());
    for j in 0..pool.len() {
        u.push(model.add_var(format!("u[{j}]"), 0.0, f64::INFINITY, 0.0));
        eta.push(model.add_var(format!("eta[{j}]"), 0.0, f64::INFINITY, 0.0));
        delta.push(
            (0..kk)
                .map(|k| model.add_var(format!("delta[{j},{k}]"), 0.0, f64::INFINITY, 0.0))
                .collect(),
        );
    }
    let tail: Vec<Vec<VarId>> = (0..kk).map(|k| delta.iter().map(|d| d[k]).collect()).collect();
    let epigraph = core.add_rows(&mut model, &inst.amb, inst.risk, &tail)?;
    let rrlt = model.add_constraint(
        "rrlt",
        eta.iter().map(|&e| (e, 1.0)).chain([(core.zeta, -1.0)]),
        Sense::Eq,
        0.0,
    )?;
    let sum_u = model.add_constraint("sum_u", u.iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0)?;
    for j in 0..pool.len() {
        let (uj, ej) = (u[j], eta[j]);
        model.add_constraint(format!("eta_floor[{j}]"), [(ej, 1.0), (uj, -a)], Sense::Ge, 0.0)?;
        model.add_constraint(format!("eta_cap[{j}]"), [(ej, 1.0), (uj, -b)], Sense::Le, 0.0)?;
        model.add_constraint(
            format!("eta_upper_link[{j}]"),
            [(ej, 1.0), (core.zeta, -1.0), (uj, -b)],
            Sense::Ge,
            -b,
        )?;
        model.add_constraint(
            format!("eta_lower_link[{j}]"),
            [(ej, 1.0), (core.zeta, -1.0), (uj, -a)],
            Sense::Le,
            -a,
        )?;
        for k in 0..kk {
            model.add_constraint(
                format!("excess[{j},{k}]"),
                [(delta[j][k], 1.0), (uj, -pool.flows()[j][k]), (ej, 1.0)],
                Sense::Ge,
                0.0,
            )?;
        }
    }
    Ok(MasterModel {
        model,
        u,
        eta,
        zeta: core.zeta,
        epigraph,
        sum_u,
        rrlt,
    })
}

pub fn solve_master(mm: &MasterModel, cfg: &SolverConfig, warm: Option<&Basis>) -> Result<MasterSolution> {
    let sol = solve_lp_warm(&mm.model, cfg, warm)?.require_optimal()?;
    Ok(MasterSolution {
        objective: sol.objective,
        u: mm.u.iter().map(|&v| sol.value(v)).collect(),
        eta: mm.eta.iter().map(|&v| sol.value(v)).collect(),
        zeta: sol.value(mm.zeta),
        duals: MasterDuals {
            phi: RobustCore::worst_q(&sol, &mm.epigraph),
            p: -sol.dual(mm.sum_u),
            pi: -sol.dual(mm.rrlt),
        },
        basis: sol.basis.clone(),
        primal: sol.primal,
    })
}

/// Outcome of a pricing call.
#[derive(Debug, Clone, PartialEq)]
pub struct Pricing {
    /// Smallest reduced cost found; `+∞` when every plan is excluded.
    pub value: f64,
    /// Proven lower bound on the smallest reduced cost.
    pub bound: f64,
    pub plan: Option<InterdictionPlan>,
}

/// Reduced cost of a plan with flow vector `f`, minimized over `η ∈ bx`.
///
/// The function of `η` is convex piecewise linear with kinks at the flow
/// values, so checking the endpoints and the kinks inside is enough.
pub fn reduced_cost(f: &[f64], duals: &MasterDuals, bx: IntervalBox, risk: RiskSpec) -> f64 {
    let w = risk.tail_weight();
    let h = |eta: f64| {
        duals.p
            + duals.pi * eta
            + w * f.iter().zip(&duals.phi).map(|(&v, &ph)| ph * (v - eta).max(0.0)).sum::<f64>()
    };
    let mut best = h(bx.lo()).min(h(bx.hi()));
    for &v in f {
        if bx.contains(v) {
            best = best.min(h(v));
        }
    }
    best
}

/// Prices by exhaustion over every plan within the budget, skipping
/// `exclude`. Ties go to the lexicographically smallest plan.
pub fn price_enumerate(
    duals: &MasterDuals,
    bx: IntervalBox,
    inst: &Instance,
    exclude: &[InterdictionPlan],
    cap: u128,
) -> Result<Pricing> {
    let plans = enumerate_plans(inst.net.num_arcs(), inst.budget, cap)?;
    let mut best = Pricing {
        value: f64::INFINITY,
        bound: f64::INFINITY,
        plan: None,
    };
    for plan in plans {
        if exclude.contains(&plan) {
            continue;
        }
        let f = flow_vector(&inst.net, &inst.scenarios, &plan)?;
        let v = reduced_cost(&f, duals, bx, inst.risk);
        if v < best.value - 1e-12 {
            best = Pricing {
                value: v,
                bound: v,
                plan: Some(plan),
            };
        }
    }
    Ok(best)
}

/// The pricing MILP: each scenario's flow enters through the min-cut dual
/// `(λ_k, υ_k)`, with `Υ_k = diag(ℓ) λ_k` linearized, so
/// `Δ_k ≥ (1 − ℓ)ᵀ C_k λ_k − η` bounds the excess over the threshold.
pub fn build_pricing_model(
    duals: &MasterDuals,
    bx: IntervalBox,
    inst: &Instance,
    exclude: &[InterdictionPlan],
) -> Result<(LinearModel, Vec<VarId>)> {
    let net = &inst.net;
    let ne = net.num_arcs();
    let w = inst.risk.tail_weight();
    let d = net.sink_indicator();
    let mut model = LinearModel::new();
    let ell: Vec<VarId> = (0..ne).map(|e| model.add_var(format!("ell[{e}]"), 0.0, 1.0, 0.0)).collect();
    let eta = model.add_var("eta", bx.lo(), bx.hi(), duals.pi);
    model.set_offset(duals.p);
    for (k, cap) in inst.scenarios.iter().enumerate() {
        let c = cap.as_slice();
        let delta = model.add_var(format!("delta[{k}]"), 0.0, f64::INFINITY, w * duals.phi[k]);
        let lambda: Vec<VarId> = (0..ne).map(|e| model.add_var(format!("lambda[{k},{e}]"), 0.0, 1.0, 0.0)).collect();
        let prod: Vec<VarId> = (0..ne).map(|e| model.add_var(format!("prod[{k},{e}]"), 0.0, 1.0, 0.0)).collect();
        let pot: Vec<Option<VarId>> = (0..net.node_count())
            .map(|i| {
                (!net.is_terminal(i))
                    .then(|| model.add_var(format!("potential[{k},{i}]"), f64::NEG_INFINITY, f64::INFINITY, 0.0))
            })
            .collect();
        let mut row = vec![(delta, 1.0), (eta, 1.0)];
        for e in 0..ne {
            row.push((lambda[e], -c[e]));
            row.push((prod[e], c[e]));
        }
        model.add_constraint(format!("excess[{k}]"), row, Sense::Ge, 0.0)?;
        for (e, &(tail, head)) in net.arcs().iter().enumerate() {
            model.add_constraint(format!("prod_ell[{k},{e}]"), [(prod[e], 1.0), (ell[e], -1.0)], Sense::Le, 0.0)?;
            model.add_constraint(
                format!("prod_lambda[{k},{e}]"),
                [(prod[e], 1.0), (lambda[e], -1.0)],
                Sense::Le,
                0.0,
            )?;
            model.add_constraint(
                format!("prod_both[{k},{e}]"),
                [(prod[e], 1.0), (lambda[e], -1.0), (ell[e], -1.0)],
                Sense::Ge,
                -1.0,
            )?;
            let mut cut = vec![(lambda[e], 1.0)];
            if let Some(v) = pot[head] {
                cut.push((v, 1.0));
            }
            if let Some(v) = pot[tail] {
                cut.push((v, -1.0));
            }
            model.add_constraint(format!("cut_dual[{k},{e}]"), cut, Sense::Ge, d[e])?;
        }
    }
    model.add_constraint("budget", ell.iter().map(|&v| (v, 1.0)), Sense::Le, inst.budget as f64)?;
    for (j, plan) in exclude.iter().enumerate() {
        let row = (0..ne).map(|e| (ell[e], if plan.contains(e) { -1.0 } else { 1.0 }));
        model.add_constraint(format!("exclude[{j}]"), row, Sense::Ge, 1.0 - plan.len() as f64)?;
    }
    Ok((model, ell))
}

/// Prices with the MILP, skipping the plans in `exclude` through no-good
/// cuts. The returned value is re-evaluated exactly from the plan's flows.
pub fn price(
    duals: &MasterDuals,
    bx: IntervalBox,
    inst: &Instance,
    exclude: &[InterdictionPlan],
    cfg: &SolverConfig,
) -> Result<Pricing> {
    let (model, ell) = build_pricing_model(duals, bx, inst, exclude)?;
    let mip = solve_mip(&model, &ell, cfg)?;
    match mip.status {
        MipStatus::Infeasible => {
            return Ok(Pricing {
                value: f64::INFINITY,
                bound: f64::INFINITY,
                plan: None,
            })
        }
        MipStatus::Unbounded => return Err(Error::NumericallyUnstable("pricing problem unbounded")),
        MipStatus::Optimal | MipStatus::NodeLimit => {}
    }
    if !mip.has_solution() {
        return Ok(Pricing {
            value: f64::INFINITY,
            bound: mip.bound,
            plan: None,
        });
    }
    let ell_vals: Vec<f64> = ell.iter().map(|&v| mip.value(v)).collect();
    let plan = InterdictionPlan::from_indicator(&ell_vals);
    let f = flow_vector(&inst.net, &inst.scenarios, &plan)?;
    let value = reduced_cost(&f, duals, bx, inst.risk);
    Ok(Pricing {
        value,
        bound: mip.bound.min(value),
        plan: Some(plan),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMethod {
    Milp,
    Enumerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub lp: SolverConfig,
    pub method: PricingMethod,
    pub max_columns: usize,
    /// A column enters when its reduced cost is below
    /// `−tol · (1 + |master objective|)`.
    pub reduced_cost_tol: f64,
    pub enumeration_cap: u128,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            lp: SolverConfig::default(),
            method: PricingMethod::Milp,
            max_columns: 500,
            reduced_cost_tol: 1e-7,
            enumeration_cap: 100_000,
        }
    }
}

/// One line of column-generation progress.
#[derive(Debug, Clone)]
pub struct CgIteration<'a> {
    pub iteration: usize,
    pub pool_size: usize,
    pub objective: f64,
    pub reduced_cost: f64,
    pub entering: Option<&'a InterdictionPlan>,
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    /// Valid lower bound on the relaxation over the full plan set.
    pub bound: f64,
    pub master: MasterSolution,
    pub cap_reached: bool,
    pub iterations: usize,
    pub columns_added: usize,
    pub last_reduced_cost: f64,
}

/// Solves the relaxation over all plans by alternating master solves and
/// pricing. New plans are kept in `pool`.
pub fn column_generation(
    bx: IntervalBox,
    inst: &Instance,
    pool: &mut ColumnPool,
    cfg: &CgConfig,
    log: &mut dyn FnMut(&CgIteration<'_>),
) -> Result<CgOutcome> {
    let mut iterations = 0;
    let mut added = 0;
    loop {
        iterations += 1;
        let mm = build_master(pool, bx, inst)?;
        let master = solve_master(&mm, &cfg.lp, pool.basis.as_ref())?;
        pool.basis = Some(master.basis.clone());
        let pricing = match cfg.method {
            PricingMethod::Milp => price(&master.duals, bx, inst, pool.plans(), &cfg.lp)?,
            PricingMethod::Enumerate => price_enumerate(&master.duals, bx, inst, pool.plans(), cfg.enumeration_cap)?,
        };
        let threshold = -cfg.reduced_cost_tol * (1.0 + master.objective.abs());
        let improving = pricing.value < threshold;
        log(&CgIteration {
            iteration: iterations,
            pool_size: pool.len(),
            objective: master.objective,
            reduced_cost: pricing.value,
            entering: pricing.plan.as_ref().filter(|_| improving),
        });
        let capped = improving && added >= cfg.max_columns;
        if !improving || capped {
            // Every column has a unit coefficient in Σu = 1, so the master
            // value plus the most negative reduced cost bounds the full
            // relaxation from below.
            let bound = if capped {
                master.objective + pricing.bound.min(0.0)
            } else {
                master.objective
            };
            return Ok(CgOutcome {
                bound,
                master,
                cap_reached: capped,
                iterations,
                columns_added: added,
                last_reduced_cost: pricing.value,
            });
        }
        let plan = pricing.plan.expect("improving pricing result carries a plan");
        if !pool.add(inst, plan)? {
            return Err(Error::NumericallyUnstable("pricing returned a pool plan"));
        }
        added += 1;
    }
}
