//! `rig`: sample, explore and check critical random intersection graphs.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or schema error,
//! 3 statistical failure.

mod plan;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rig_core::campaigns::run_campaign;
use rig_core::continuum::{
    excursions, ghp_upper_bound, kappa_scaling_check, sample_poisson_surplus, shortcuts_from_atoms,
    simulate_limit_path, HorizonPolicy, LimitParams, MetricGraphSpec,
};
use rig_core::exploration::{audit_trace, components};
use rig_core::rng::derive_seed;
use rig_core::surplus_triangles::{classify_surplus, component_table, write_component_csv, write_surplus_csv};
use rig_core::{
    build_config, explore, induce_intersection, sample_bipartite, scaling_set, BipartiteGraph, Error, Regime,
    RegimeConfig, RootRule, Shape,
};
use serde::Serialize;

use crate::plan::PlanFile;

#[derive(Parser, Debug)]
#[command(name = "rig", version, about = "Critical random intersection graphs: sampling, exploration, limit checks")]
struct Cli {
    /// Worker threads (default: all cores). RIG_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one B(n, m, p) and print a summary line.
    Sample(SampleArgs),
    /// Run the depth-first exploration and audit its identities.
    Explore(ExploreArgs),
    /// Run an experiment plan (JSON).
    Campaign(CampaignArgs),
    /// Simulate limit paths, excursions and shortcut sets.
    Limits(LimitsArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Moderate regime: m = round(theta n).
    #[arg(long, conflicts_with_all = ["aspect", "m"])]
    theta: Option<f64>,
    /// Light or heavy regime: m = round(n^aspect).
    #[arg(long, conflicts_with = "m")]
    aspect: Option<f64>,
    /// Explicit community count.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegimeArg {
    Light,
    Moderate,
    Heavy,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Light => Regime::Light,
            RegimeArg::Moderate => Regime::Moderate,
            RegimeArg::Heavy => Regime::Heavy,
        }
    }
}

impl ModelArgs {
    fn config(&self) -> Result<RegimeConfig, Error> {
        let regime: Regime = self.regime.ok_or_else(|| Error::InvalidConfig("--regime is required".into()))?.into();
        let n = self.n.ok_or_else(|| Error::InvalidConfig("--n is required".into()))?;
        let shape = match (self.theta, self.aspect, self.m) {
            (Some(t), None, None) => Shape::Theta(t),
            (None, Some(a), None) => Shape::Aspect(a),
            (None, None, Some(m)) => Shape::Communities(m),
            (None, None, None) if regime == Regime::Moderate => Shape::Theta(1.0),
            _ => return Err(Error::InvalidConfig("give exactly one of --theta, --aspect, --m".into())),
        };
        build_config(regime, self.lambda, shape, n)
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the bipartite graph as `n m seed` followed by `v u` lines.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RootArg {
    Uniform,
    Smallest,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Explore a dumped graph instead of sampling one.
    #[arg(long, conflicts_with_all = ["regime", "theta", "aspect", "m", "n"])]
    graph: Option<PathBuf>,
    #[arg(long)]
    trace_csv: PathBuf,
    #[arg(long, value_enum, default_value_t = RootArg::Uniform)]
    root_rule: RootArg,
    /// Surplus records `k,l,case,u,w`.
    #[arg(long)]
    surplus_csv: Option<PathBuf>,
    /// Ranked components `rank,zeta,u_size,surplus,triangles`.
    #[arg(long)]
    components_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    plan: PathBuf,
    /// Overrides the plan's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    #[arg(long, conflicts_with = "inf", required_unless_present = "inf")]
    theta: Option<f64>,
    /// The theta = infinity walk.
    #[arg(long)]
    inf: bool,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long = "T", default_value_t = 15.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Excursions that receive shortcut sets.
    #[arg(long, default_value_t = 5)]
    ranks: usize,
    /// Bounds between grid refinements of the longest excursion.
    #[arg(long)]
    ghp: bool,
    /// Replicates of the kappa scaling check (finite theta; 0 skips it).
    #[arg(long, default_value_t = 0)]
    kappa_replicates: usize,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Usage(String),
    Statistical(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidPlan(_) | Error::Parse(_) | Error::LabelOutOfRange { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

fn cmd_sample(args: &SampleArgs) -> Outcome {
    let config = args.model.config()?;
    let graph = sample_bipartite(&config, args.model.seed);
    let trace = explore(&graph, RootRule::SmallestLabel);
    let comps = components(&trace);
    let largest = comps.first().map_or(0, |c| c.v_size);
    let zeta = largest as f64 * scaling_set(&config).mass_scale;
    println!(
        "regime={} n={} m={} p={:.6e} edges={} components={} largest={} zeta1={:.4}",
        config.regime.as_str(),
        config.n,
        config.m,
        config.p,
        graph.edge_count(),
        comps.len(),
        largest,
        zeta
    );
    if let Some(path) = &args.dump_graph {
        let mut out = create(path)?;
        graph.write_dump(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_explore(args: &ExploreArgs) -> Outcome {
    let graph = match &args.graph {
        Some(path) => {
            let file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            BipartiteGraph::read_dump(BufReader::new(file))?
        }
        None => {
            let config = args.model.config()?;
            let g = sample_bipartite(&config, args.model.seed);
            if config.regime == Regime::Heavy {
                println!("heavy regime: exploring the transposed graph");
                g.transposed()
            } else {
                g
            }
        }
    };
    let rule = match args.root_rule {
        RootArg::Uniform => RootRule::UniformSeeded(derive_seed(args.model.seed, 1)),
        RootArg::Smallest => RootRule::SmallestLabel,
    };
    let trace = explore(&graph, rule);
    let mut out = create(&args.trace_csv)?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    let audit = audit_trace(&trace);
    println!(
        "audit: {} steps checked, {} violations, {} components",
        audit.steps_checked,
        audit.violations,
        trace.comp_bounds.len()
    );
    for msg in audit.messages.iter().take(10) {
        println!("  {msg}");
    }
    if args.surplus_csv.is_some() || args.components_csv.is_some() {
        let records = classify_surplus(&graph, &trace)?;
        if let Some(path) = &args.surplus_csv {
            let mut out = create(path)?;
            write_surplus_csv(&records, &mut out)?;
            out.flush()?;
        }
        if let Some(path) = &args.components_csv {
            let g = induce_intersection(&graph);
            let mut out = create(path)?;
            write_component_csv(&component_table(&trace, &records, &g), &mut out)?;
            out.flush()?;
        }
    }
    if audit.is_clean() {
        Ok(())
    } else {
        Err(Failure::Internal("exploration identities violated".into()))
    }
}

fn cmd_campaign(args: &CampaignArgs) -> Outcome {
    let mut plan = PlanFile::load(&args.plan)?.into_plan()?;
    if let Some(dir) = &args.output_dir {
        plan.output_dir = Some(dir.clone());
    }
    let result = run_campaign(&plan)?;
    println!("{:<24} {:<5} {:>8}", "target", "pass", "reports");
    for t in &result.targets {
        println!("{:<24} {:<5} {:>8}", t.target.as_str(), if t.pass { "yes" } else { "no" }, t.reports.len());
        if let Some(e) = &t.error {
            println!("  error: {e}");
        }
        for r in t.reports.iter().filter(|r| !r.pass) {
            println!("  {}: observed {:.6} reference {:.6} tolerance {:.6}", r.name, r.observed, r.reference, r.tolerance);
        }
    }
    if let Some(dir) = &plan.output_dir {
        println!("results in {}", dir.join(&plan.name).display());
    }
    if result.pass() {
        Ok(())
    } else {
        Err(Failure::Statistical("some targets failed".into()))
    }
}

#[derive(Serialize)]
struct GhpRow {
    coarse_resolution: f64,
    fine_resolution: f64,
    bound: f64,
}

fn cmd_limits(args: &LimitsArgs) -> Outcome {
    let params = match args.theta {
        Some(theta) => LimitParams::new(args.lambda, theta),
        None => LimitParams::infinite(args.lambda),
    };
    let path = simulate_limit_path(params, args.dt, args.horizon, args.seed)?;
    fs::create_dir_all(&args.out)?;
    let mut out = create(&args.out.join("path.csv"))?;
    path.write_csv(&mut out)?;
    out.flush()?;

    let exc = excursions(&path, HorizonPolicy::Drop);
    let mut counts = Vec::new();
    let mut out = create(&args.out.join("shortcuts.csv"))?;
    writeln!(out, "k,s,t")?;
    let mut longest = None;
    for (k, e) in exc.intervals.iter().take(args.ranks).enumerate() {
        let atoms = sample_poisson_surplus(&path, e, derive_seed(args.seed, k as u64 + 1));
        let set = shortcuts_from_atoms(&path, e, &atoms);
        for &(s, t) in &set.pairs {
            writeln!(out, "{},{s},{t}", k + 1)?;
        }
        counts.push(set.len());
        if k == 0 {
            longest = Some((*e, set));
        }
    }
    out.flush()?;
    let mut out = create(&args.out.join("excursions.csv"))?;
    exc.write_csv(&counts, &mut out)?;
    out.flush()?;
    println!(
        "path: {} points, {} excursions{}",
        path.len(),
        exc.intervals.len(),
        if exc.dropped_final { " (one open at the horizon dropped)" } else { "" }
    );

    if args.ghp {
        let (e, set) = longest.ok_or_else(|| Failure::Usage("no complete excursion to refine".into()))?;
        let fine = MetricGraphSpec::from_excursion(&path, &e, &set)?;
        let mut rows = Vec::new();
        for factor in [8usize, 4, 2] {
            let coarse = fine.coarsen(factor)?;
            let finer = fine.coarsen(factor / 2)?;
            let bound = ghp_upper_bound(&coarse, &finer, coarse.resolution())?;
            println!("ghp bound {:.4e} -> {:.4e}: {bound:.6}", coarse.resolution(), finer.resolution());
            rows.push(GhpRow { coarse_resolution: coarse.resolution(), fine_resolution: finer.resolution(), bound });
        }
        let file = create(&args.out.join("ghp.json"))?;
        serde_json::to_writer_pretty(file, &rows).map_err(|e| Failure::Internal(e.to_string()))?;
    }

    if args.kappa_replicates > 0 {
        let theta = args.theta.ok_or_else(|| Failure::Usage("the kappa check needs a finite --theta".into()))?;
        let rep = kappa_scaling_check(theta, args.lambda, args.dt, args.horizon, args.kappa_replicates, args.seed)?;
        let file = create(&args.out.join("kappa.json"))?;
        serde_json::to_writer_pretty(file, &rep).map_err(|e| Failure::Internal(e.to_string()))?;
        println!(
            "kappa {:.4}: drift diff {:.2e}, mean z {:.2}, variance rel diff {:.3}, KS {:.4} (critical {:.4}) {}",
            rep.kappa,
            rep.drift_max_diff,
            rep.max_mean_z,
            rep.max_var_rel_diff,
            rep.ks,
            rep.ks_critical,
            if rep.pass { "pass" } else { "FAIL" }
        );
        if !rep.pass {
            return Err(Failure::Statistical("kappa scaling check failed".into()));
        }
    }
    Ok(())
}

fn configure_threads(flag: Option<usize>) -> Outcome {
    let threads = match std::env::var("RIG_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("RIG_THREADS={v:?} is not a count")))?),
        Err(_) => flag,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Limits(a) => cmd_limits(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Statistical(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
