use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ocst_core::bench::{
    expand_cells, format_summary, read_rows, run_experiment, summarize, ExperimentConfig, Initialization,
    InstanceSource, SolverTarget,
};
use ocst_core::exact::{brute_force_optimum, f0q_optimum, EnumerationBudget, LeafSolver};
use ocst_core::formulations::{attach_search_space_cuts, build, extract_tree, lift_into, FormulationKind, Tag};
use ocst_core::heuristics::{initial_tree, local_search, local_search_traced, MoveKind, NeighborhoodSpec, Strategy};
use ocst_core::instance::{generate_instance, Instance};
use ocst_core::milp::{solve_mip, SolveParams};
use ocst_core::model::{export_lp, linearize};

#[derive(Parser)]
#[command(name = "ocst", version, about = "Degree-constrained optimum communication spanning trees")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write generated instances as JSON files.
    Gen(GenArgs),
    /// Export linearized LP files for one instance.
    Build(BuildArgs),
    /// Solve one instance with the built-in MILP solver.
    Solve(SolveArgs),
    /// Brute-force optimum by enumerating every tree.
    Oracle(OracleArgs),
    /// Greedy start followed by local search.
    Heur(HeurArgs),
    /// Run a full experiment grid.
    Bench(BenchArgs),
    /// Per-formulation statistics of a report.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, env = "OCST_OUT_DIR", default_value = "ocst-out")]
    out: PathBuf,
}

#[derive(Args)]
struct GeneratorArgs {
    /// Size of the synthetic OD table that instances are sampled from.
    #[arg(long, default_value_t = 30)]
    pool: usize,
    /// Fraction of non-zero OD entries.
    #[arg(long, default_value_t = 0.6)]
    density: f64,
}

/// An instance file, or a generated instance when no file is given.
#[derive(Args)]
struct InstanceArgs {
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    generator: GeneratorArgs,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance> {
        match &self.instance {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(Instance::from_json(&text)?)
            }
            None => Ok(generate_instance(self.n, self.generator.pool, self.generator.density, None, self.seed)?),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', default_value = "7")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Degree sequences per (n, seed).
    #[arg(long, default_value_t = 1)]
    degseqs: usize,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "F1Q,F1Q_UT,F2Q,F0L,F1L,F2L")]
    formulations: Vec<String>,
    /// Add the search-space cuts.
    #[arg(long)]
    cuts: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    None,
    LocalSearch,
}

impl From<InitArg> for Initialization {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::None => Initialization::None,
            InitArg::LocalSearch => Initialization::LocalSearch,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "F2L")]
    formulations: Vec<String>,
    /// Seconds per formulation.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap_tol: f64,
    #[arg(long, value_enum, default_value = "none")]
    init: InitArg,
    #[arg(long)]
    cuts: bool,
    /// Print the solver log.
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Use defoliated-tree enumeration with leaf assignment.
    #[arg(long)]
    f0q: bool,
    /// Largest number of trees to enumerate.
    #[arg(long, default_value_t = 10_000_000)]
    max_trees: u128,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Best,
    First,
}

#[derive(Clone, Copy, ValueEnum)]
enum MoveArg {
    Exchange,
    Swap,
}

#[derive(Args)]
struct HeurArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value = "best")]
    strategy: StrategyArg,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exchange,swap")]
    moves: Vec<MoveArg>,
    /// Print every accepted move.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    MiniMilp,
    LpExport,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "7")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    degseqs: usize,
    #[arg(long, value_delimiter = ',', default_value = "F0Q,F1Q,F1Q_UT,F2Q,F0L,F1L,F2L")]
    formulations: Vec<String>,
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap_tol: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value = "none")]
    init: InitArg,
    #[arg(long, value_enum, default_value = "mini-milp")]
    target: TargetArg,
    #[arg(long)]
    cuts: bool,
    /// OD matrix files to sample from instead of the generator.
    #[arg(long, value_delimiter = ',')]
    od: Vec<PathBuf>,
    /// Fixed instance files, each used as is.
    #[arg(long = "instance", value_delimiter = ',')]
    instances: Vec<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SummarizeArgs {
    /// A rows.json or rows.csv report.
    report: PathBuf,
    /// Also write summary.json next to the report.
    #[arg(long)]
    write: bool,
}

fn parse_kinds(list: &[String]) -> Result<Vec<FormulationKind>> {
    list.iter().map(|s| s.parse::<FormulationKind>().with_context(|| format!("formulation {s:?}"))).collect()
}

fn print_json(v: &serde_json::Value) {
    println!("{v}");
}

fn gen(a: GenArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        sources: vec![InstanceSource::Generator { pool: a.generator.pool, density: a.generator.density }],
        sizes: a.n,
        degseqs_per_n: a.degseqs,
        seeds: a.seeds,
        ..ExperimentConfig::default()
    };
    fs::create_dir_all(&a.out.out)?;
    for cell in expand_cells(&cfg)? {
        let path = a.out.out.join(format!("{}-d{}.json", cell.id, cell.degseq));
        fs::write(&path, cell.instance.to_json())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn build_cmd(a: BuildArgs) -> Result<()> {
    let inst = a.inst.load()?;
    fs::create_dir_all(&a.out.out)?;
    for kind in parse_kinds(&a.formulations)? {
        if kind.tag() == Tag::F0Q {
            bail!("F0Q has no single model; use `ocst oracle --f0q`");
        }
        let mut model = build(&inst, &kind)?;
        if a.cuts {
            model = attach_search_space_cuts(&model, &inst)?;
        }
        let model = linearize(&model)?;
        let name: String = kind.to_string().chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' }).collect();
        let path = a.out.out.join(format!("{name}.lp"));
        fs::write(&path, export_lp(&model)?)?;
        println!("{} vars {} rows {}", path.display(), model.num_vars(), model.num_constraints());
    }
    Ok(())
}

fn solve_cmd(a: SolveArgs) -> Result<()> {
    let inst = a.inst.load()?;
    let start_tree = match a.init {
        InitArg::LocalSearch => Some(local_search(&initial_tree(&inst, a.inst.seed)?, &inst, &NeighborhoodSpec::default())),
        InitArg::None => None,
    };
    for kind in parse_kinds(&a.formulations)? {
        if kind.tag() == Tag::F0Q {
            let r = f0q_optimum(&inst, LeafSolver::Auto, EnumerationBudget::default())?;
            print_json(&json!({
                "formulation": kind.to_string(),
                "status": "optimal",
                "record": r.cost,
                "bound": r.cost,
                "tree": r.tree.edges(),
                "elapsed": r.elapsed,
            }));
            continue;
        }
        let mut model = build(&inst, &kind)?;
        if a.cuts {
            model = attach_search_space_cuts(&model, &inst)?;
        }
        let model = linearize(&model)?;
        let mut params = SolveParams { time_limit: a.time_limit, abs_gap_tol: a.gap_tol, ..SolveParams::default() };
        if let Some(t) = &start_tree {
            params.incumbent = Some(lift_into(t, &inst, &model)?);
        }
        let r = solve_mip(&model, &params)?;
        if a.log {
            for line in &r.log {
                eprintln!("{line}");
            }
        }
        let mut out = r.to_json();
        out["formulation"] = json!(kind.to_string());
        if let Some(rec) = &r.record {
            if let Ok(tree) = extract_tree(&rec.assignment, &inst, &kind) {
                out["tree"] = json!(tree.edges());
            }
        }
        print_json(&out);
    }
    Ok(())
}

fn oracle_cmd(a: OracleArgs) -> Result<()> {
    let inst = a.inst.load()?;
    let budget = EnumerationBudget { max_trees: a.max_trees };
    let r = if a.f0q { f0q_optimum(&inst, LeafSolver::Auto, budget)? } else { brute_force_optimum(&inst, budget)? };
    print_json(&json!({
        "cost": r.cost,
        "tree": r.tree.edges(),
        "trees_examined": r.trees_examined,
        "elapsed": r.elapsed,
    }));
    Ok(())
}

fn heur_cmd(a: HeurArgs) -> Result<()> {
    let inst = a.inst.load()?;
    let strategy = match a.strategy {
        StrategyArg::Best => Strategy::BestImprovement,
        StrategyArg::First => Strategy::FirstImprovement,
    };
    let moves = a.moves.iter().map(|m| match m {
        MoveArg::Exchange => MoveKind::TwoEdgeExchange,
        MoveArg::Swap => MoveKind::EqualDegreeLabelSwap,
    });
    let spec = NeighborhoodSpec::new(moves, strategy)?;
    let start = initial_tree(&inst, a.inst.seed)?;
    let out = local_search_traced(&start, &inst, &spec);
    if a.trace {
        for s in &out.trace {
            eprintln!("{:4} {:>12} {}", s.step, s.cost, s.mv);
        }
    }
    print_json(&json!({
        "initial_cost": out.initial_cost,
        "cost": out.cost,
        "steps": out.trace.len(),
        "tree": out.tree.edges(),
        "trace": out.trace,
    }));
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let mut sources: Vec<InstanceSource> = Vec::new();
    sources.extend(a.od.into_iter().map(|path| InstanceSource::OdMatrix { path }));
    sources.extend(a.instances.into_iter().map(|path| InstanceSource::Instance { path }));
    if sources.is_empty() {
        sources.push(InstanceSource::Generator { pool: a.generator.pool, density: a.generator.density });
    }
    let cfg = ExperimentConfig {
        sources,
        sizes: a.n,
        degseqs_per_n: a.degseqs,
        formulations: a.formulations,
        target: match a.target {
            TargetArg::MiniMilp => SolverTarget::MiniMilp,
            TargetArg::LpExport => SolverTarget::LpExport,
        },
        time_limit: a.time_limit,
        gap_tol: a.gap_tol,
        seeds: a.seeds,
        init: a.init.into(),
        cuts: a.cuts,
        workers: a.workers,
        out_dir: Some(a.out.out.clone()),
    };
    fs::create_dir_all(&a.out.out)?;
    fs::write(a.out.out.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
    let rows = run_experiment(&cfg)?;
    eprintln!("{} rows written to {}", rows.len(), a.out.out.display());
    print!("{}", format_summary(&summarize(&rows)));
    Ok(())
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let rows = read_rows(&a.report)?;
    if rows.is_empty() {
        bail!("{} has no rows", a.report.display());
    }
    let summary = summarize(&rows);
    print!("{}", format_summary(&summary));
    if a.write {
        let dir = a.report.parent().unwrap_or(Path::new("."));
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Build(a) => build_cmd(a),
        Cmd::Solve(a) => solve_cmd(a),
        Cmd::Oracle(a) => oracle_cmd(a),
        Cmd::Heur(a) => heur_cmd(a),
        Cmd::Bench(a) => bench_cmd(a),
        Cmd::Summarize(a) => summarize_cmd(a),
    }
}
