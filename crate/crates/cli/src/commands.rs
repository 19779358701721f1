//! Command-line definition and the subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use drni_core::baseline::{solve_deterministic_enumerate, solve_deterministic_milp, BaselineConfig};
use drni_core::bnb::{spatial_bnb, BnbConfig, NodeReport};
use drni_core::experiments::{
    failure, mix_seed, out_of_sample_cvar, river_crossing, run_study, sample_scenarios, FactorModel, StudyConfig,
};
use drni_core::graph::{count_plans, enumerate_plans, generate_grid, InterdictionPlan};
use drni_core::master::{CgConfig, PricingMethod};
use drni_core::risk::{dominance_check, loizou_objective, worst_case_cvar, BudgetedAmbiguitySet, Dominance, RandomizedStrategy, RiskSpec};
use drni_core::Instance;

use crate::schema::{
    FactorModelFile, GenerationSeeds, InstanceFile, Overrides, RecordRow, ReportFile, ResultFile,
    SummaryRow,
};
use crate::WallClock;

#[derive(Debug, Parser)]
#[command(name = "drni", version, about = "Distributionally robust CVaR network interdiction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid network plus factor-model scenarios, written as an instance file.
    Generate(GenerateArgs),
    /// Optimal randomized strategy by spatial branch-and-bound.
    Solve(SolveArgs),
    /// Optimal deterministic plan.
    SolveDet(SolveDetArgs),
    /// Out-of-sample CVaR of a solved strategy under the instance's factor model.
    Evaluate(EvaluateArgs),
    /// In-sample and out-of-sample comparison of randomized and deterministic strategies.
    Study(StudyArgs),
    /// The river-crossing example: four objective values and the dominance verdict.
    RiverCrossing(RiverCrossingArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 4)]
    pub rows: usize,
    #[arg(long, default_value_t = 2)]
    pub cols: usize,
    #[arg(long, default_value_t = 20)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 1)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q_bar: f64,
    #[arg(long, default_value_t = 0)]
    pub network_seed: u64,
    /// Seed for the factor model and the scenario draws.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PricingArg {
    Milp,
    Enumerate,
}

#[derive(Debug, Args)]
pub struct InstanceOverrides {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
}

impl From<&InstanceOverrides> for Overrides {
    fn from(o: &InstanceOverrides) -> Self {
        Overrides {
            gamma: o.gamma,
            alpha: o.alpha,
            budget: o.budget,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub overrides: InstanceOverrides,
    /// Relative optimality tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub subintervals: usize,
    #[arg(long, value_enum, default_value_t = PricingArg::Milp)]
    pub pricing: PricingArg,
    /// Print one line per processed node to stderr.
    #[arg(long)]
    pub progress: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveDetArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub overrides: InstanceOverrides,
    /// Brute force over plans instead of the MILP.
    #[arg(long)]
    pub enumerate: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub instance: PathBuf,
    pub result: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub mc_count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 4)]
    pub rows: usize,
    #[arg(long, default_value_t = 2)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub network_seed: u64,
    #[arg(long, default_value_t = 20)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 1)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q_bar: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.5, 1.0, 10.0, 20.0])]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 10_000)]
    pub mc_count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Reuse the same sample sets for every Γ level.
    #[arg(long)]
    pub same_seeds: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Per-instance branch-and-bound limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// JSON report.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-instance records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Per-Γ summaries as CSV.
    #[arg(long)]
    pub summary_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RiverCrossingArgs {
    #[arg(long, default_value_t = 3.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 2.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(f);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
        None => {
            serde_json::to_writer_pretty(&mut *out, value)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a, out),
        Command::Solve(a) => solve(&a, out),
        Command::SolveDet(a) => solve_det(&a, out),
        Command::Evaluate(a) => evaluate(&a, out),
        Command::Study(a) => study(&a, out),
        Command::RiverCrossing(a) => river_crossing_example(&a, out),
    }
}

pub fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    if a.scenarios == 0 {
        bail!("at least one scenario is needed");
    }
    let net = generate_grid(a.rows, a.cols, a.network_seed)?;
    let seeds = GenerationSeeds {
        network: a.network_seed,
        factor: mix_seed(a.seed, 1),
        sample: mix_seed(a.seed, 2),
    };
    let fm = FactorModel::random(net.num_arcs(), seeds.factor);
    let sc = sample_scenarios(&fm, a.scenarios, seeds.sample)?;
    let amb = BudgetedAmbiguitySet::uniform(a.scenarios, a.q_bar, a.gamma)?;
    let inst = Instance::new(net, sc, amb, RiskSpec::new(a.alpha)?, a.budget)?;
    let mut file = InstanceFile::from_instance(&inst);
    file.factor_model = Some(FactorModelFile::from(&fm));
    file.seeds = Some(seeds);
    write_json(&file, a.output.as_deref(), out)
}

fn print_node(r: &NodeReport<'_>) {
    eprintln!(
        "node {:>5} depth {:>3} [{:.6}, {:.6}] lb {:.9} ub {:.9} best {:.9} pool {} open {}",
        r.node.id,
        r.node.depth,
        r.node.bx.lo(),
        r.node.bx.hi(),
        r.node.lb,
        r.node.ub,
        r.incumbent,
        r.pool_size,
        r.open_nodes
    );
}

fn describe(out: &mut dyn Write, res: &ResultFile) -> Result<()> {
    writeln!(out, "value {:.9} gap {:.3e}", res.value, res.gap)?;
    for s in &res.support {
        writeln!(out, "  {:>8.6}  {:?}", s.prob, s.arcs)?;
    }
    Ok(())
}

pub fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let file: InstanceFile = read_json(&a.instance)?;
    let inst = file.to_instance(Overrides::from(&a.overrides))?;
    let cfg = BnbConfig {
        eps: a.eps,
        time_limit: a.time_limit,
        max_nodes: a.max_nodes,
        subintervals: a.subintervals,
        cg: CgConfig {
            method: match a.pricing {
                PricingArg::Milp => PricingMethod::Milp,
                PricingArg::Enumerate => PricingMethod::Enumerate,
            },
            ..CgConfig::default()
        },
        ..BnbConfig::default()
    };
    let clock = WallClock::start();
    let progress = a.progress;
    let r = spatial_bnb(&inst, &cfg, &clock, &mut |rep| {
        if progress {
            print_node(rep);
        }
    })?;
    if r.limit_reached {
        log::warn!("node or time limit reached; gap {:.3e}", r.gap);
    }
    let res = ResultFile::from(&r);
    match &a.output {
        Some(p) => {
            write_json(&res, Some(p), out)?;
            describe(out, &res)
        }
        None => write_json(&res, None, out),
    }
}

pub fn solve_det(a: &SolveDetArgs, out: &mut dyn Write) -> Result<()> {
    let file: InstanceFile = read_json(&a.instance)?;
    let inst = file.to_instance(Overrides::from(&a.overrides))?;
    let cfg = BaselineConfig::default();
    let r = if a.enumerate {
        solve_deterministic_enumerate(&inst, &cfg)?
    } else {
        let n = count_plans(inst.net.num_arcs(), inst.budget);
        let plans = enumerate_plans(inst.net.num_arcs(), inst.budget, n.min(cfg.milp_plan_cap as u128))
            .context("plan universe too large for the MILP; use --enumerate")?;
        solve_deterministic_milp(&inst, &plans, &cfg)?
    };
    let res = ResultFile::from(&r);
    match &a.output {
        Some(p) => {
            write_json(&res, Some(p), out)?;
            describe(out, &res)
        }
        None => write_json(&res, None, out),
    }
}

#[derive(Debug, Serialize)]
struct EvaluationOutput {
    out_of_sample_cvar: f64,
    in_sample_worst_case_cvar: f64,
    alpha: f64,
    mc_count: usize,
    seed: u64,
}

pub fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let file: InstanceFile = read_json(&a.instance)?;
    let res: ResultFile = read_json(&a.result)?;
    let inst = file.to_instance(Overrides {
        alpha: a.alpha,
        ..Overrides::default()
    })?;
    let Some(fm) = &file.factor_model else {
        bail!("instance file has no factor model; create it with `drni generate`");
    };
    let fm = fm.to_model()?;
    let strategy = res.strategy(inst.net.num_arcs())?;
    strategy.check_budget(inst.budget)?;
    let oos = out_of_sample_cvar(&inst.net, &fm, &strategy, inst.risk, a.mc_count, a.seed)?;
    let ins = worst_case_cvar(&inst.net, &inst.scenarios, &inst.amb, &strategy, inst.risk)?;
    write_json(
        &EvaluationOutput {
            out_of_sample_cvar: oos,
            in_sample_worst_case_cvar: ins.value,
            alpha: inst.risk.alpha(),
            mc_count: a.mc_count,
            seed: a.seed,
        },
        None,
        out,
    )
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

pub fn study(a: &StudyArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = StudyConfig {
        rows: a.rows,
        cols: a.cols,
        network_seed: a.network_seed,
        scenarios: a.scenarios,
        budget: a.budget,
        alpha: a.alpha,
        q_bar: a.q_bar,
        gammas: a.gammas.clone(),
        instances: a.instances,
        mc_count: a.mc_count,
        seed: a.seed,
        fresh_seeds_per_gamma: !a.same_seeds,
        bnb: BnbConfig {
            eps: a.eps,
            time_limit: a.time_limit,
            ..BnbConfig::default()
        },
        baseline: BaselineConfig::default(),
    };
    let clock = WallClock::start();
    let report = run_study(&cfg, &clock, &mut |rec| match failure(rec) {
        Some(msg) => eprintln!("failed: {msg}"),
        None => {
            let o = rec.outcome.as_ref().expect("checked above");
            eprintln!(
                "Γ={:<5} #{:<3} rand {:.6} det {:.6} VRS {:7.3}% oos r {:.4} d {:.4}",
                rec.gamma, rec.instance, o.rand_value, o.det_value, o.vrs, o.cvar_r, o.cvar_d
            );
        }
    })?;
    let file = ReportFile::from(&report);
    if let Some(p) = &a.output {
        write_json(&file, Some(p), out)?;
    }
    if let Some(p) = &a.csv {
        write_csv::<RecordRow>(&file.records, p)?;
    }
    if let Some(p) = &a.summary_csv {
        write_csv::<SummaryRow>(&file.summaries, p)?;
    }
    writeln!(
        out,
        "sample sets {} across Γ levels",
        if cfg.fresh_seeds_per_gamma { "drawn fresh" } else { "shared" }
    )?;
    writeln!(
        out,
        "{:>6} {:>6} {:>8} {:>8} {:>9} {:>10} {:>9} {:>9} {:>8} {:>9}",
        "Γ", "solved", "VRS=0", "0<VRS<1", "VRS>=1", "avg VRS", "CVaR_r", "CVaR_d", "r<d", "rel diff"
    )?;
    for s in &file.summaries {
        writeln!(
            out,
            "{:>6} {:>6} {:>8} {:>8} {:>9} {:>9}% {:>9} {:>9} {:>8} {:>9}",
            s.gamma,
            s.solved,
            s.vrs_zero,
            s.vrs_below_one,
            s.vrs_at_least_one,
            fmt_opt(s.avg_vrs_at_least_one, 2),
            fmt_opt(s.avg_cvar_r, 4),
            fmt_opt(s.avg_cvar_d, 4),
            s.randomized_better,
            fmt_opt(s.avg_relative_difference.map(|x| 100.0 * x), 1)
        )?;
    }
    if a.output.is_none() && a.csv.is_none() && a.summary_csv.is_none() {
        log::info!("no output file given; only the summary was printed");
    }
    Ok(())
}

pub fn river_crossing_example(a: &RiverCrossingArgs, out: &mut dyn Write) -> Result<()> {
    let inst = river_crossing(a.tau, a.eps, a.delta, a.alpha)?;
    let plan = |arcs: &[usize]| InterdictionPlan::new(arcs.to_vec(), 3);
    let u_l = RandomizedStrategy::new(vec![plan(&[0, 2])?, plan(&[1, 2])?], vec![0.5, 0.5])?;
    let u_sd = RandomizedStrategy::point_mass(plan(&[0, 1])?);
    let g = |s| worst_case_cvar(&inst.net, &inst.scenarios, &inst.amb, s, inst.risk).map(|w| w.value);
    let gl = |s| loizou_objective(&inst.net, &inst.scenarios, &inst.amb, s, inst.risk).map(|w| w.value);
    writeln!(out, "routes: arc 0 = T1, arc 1 = T2, arc 2 = B")?;
    writeln!(out, "u_L  = 1/2 {{T1,B}} + 1/2 {{T2,B}};  u_SD = {{T1,T2}}")?;
    writeln!(out, "g_SD(u_L)  = {:.6}", g(&u_l)?)?;
    writeln!(out, "g_SD(u_SD) = {:.6}", g(&u_sd)?)?;
    writeln!(out, "g_L(u_L)   = {:.6}", gl(&u_l)?)?;
    writeln!(out, "g_L(u_SD)  = {:.6}", gl(&u_sd)?)?;
    let verdict = dominance_check(&inst.net, &inst.scenarios, inst.amb.q_hat(), &u_sd, &u_l)?;
    let text = match verdict {
        Dominance::FirstDominates => "u_SD stochastically dominates u_L",
        Dominance::SecondDominates => "u_L stochastically dominates u_SD",
        Dominance::Incomparable => "u_SD and u_L are incomparable",
        Dominance::Equal => "u_SD and u_L have the same flow distribution",
    };
    writeln!(out, "dominance (uniform q): {text}")?;
    let r = spatial_bnb(&inst, &BnbConfig::default(), &WallClock::start(), &mut |_| {})?;
    writeln!(out, "optimal randomized strategy: value {:.6}", r.value)?;
    for (p, u) in r.strategy.iter() {
        writeln!(out, "  {u:.6}  {:?}", p.arcs())?;
    }
    Ok(())
}

