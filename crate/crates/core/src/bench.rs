//! Experiment grids over instances, degree sequences and formulations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{f0q_optimum, EnumerationBudget, LeafSolver};
use crate::formulations::{attach_search_space_cuts, build, lift_into, FormulationKind, Tag};
use crate::graph::RequirementsMatrix;
use crate::heuristics::{initial_tree, local_search, NeighborhoodSpec};
use crate::instance::{
    generate_instance, load_od_matrix, random_arborescent_degree_sequence, random_connected_submatrix, Instance,
};
use crate::milp::{relative_gap, solve_mip, SolveParams};
use crate::model::{export_lp, linearize};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no such file: {0}")]
    MissingFile(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {msg}")]
    Source { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InstanceSource {
    /// Synthetic OD table of `pool` zones, sub-sampled per size and seed.
    Generator { pool: usize, density: f64 },
    /// An OD matrix file, sub-sampled per size and seed.
    OdMatrix { path: PathBuf },
    /// A fixed instance file, used with its own degree sequence.
    Instance { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTarget {
    MiniMilp,
    LpExport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    None,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sources: Vec<InstanceSource>,
    pub sizes: Vec<usize>,
    pub degseqs_per_n: usize,
    /// Formulation strings such as `F1L:M=n-1`.
    pub formulations: Vec<String>,
    pub target: SolverTarget,
    pub time_limit: f64,
    pub gap_tol: f64,
    pub seeds: Vec<u64>,
    pub init: Initialization,
    /// Adds the search-space cuts to every built model.
    pub cuts: bool,
    pub workers: usize,
    /// Where reports and exported models go; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sources: vec![InstanceSource::Generator { pool: 30, density: 0.6 }],
            sizes: vec![7],
            degseqs_per_n: 1,
            formulations: FormulationKind::all().iter().map(|k| k.to_string()).collect(),
            target: SolverTarget::MiniMilp,
            time_limit: 60.0,
            gap_tol: 1e-4,
            seeds: vec![0],
            init: Initialization::None,
            cuts: false,
            workers: 1,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Vec<FormulationKind>> {
        for s in &self.sources {
            if let InstanceSource::OdMatrix { path } | InstanceSource::Instance { path } = s {
                if !path.is_file() {
                    return Err(BenchError::MissingFile(path.clone()));
                }
            }
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("at least one seed is required".into()));
        }
        if self.workers == 0 {
            return Err(BenchError::Config("workers must be positive".into()));
        }
        if !(self.time_limit > 0.0) {
            return Err(BenchError::Config("time limit must be positive".into()));
        }
        self.formulations
            .iter()
            .map(|f| f.parse::<FormulationKind>().map_err(|e| BenchError::Config(e.to_string())))
            .collect()
    }
}

/// One (instance, degree sequence, formulation) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub n: usize,
    pub degseq: usize,
    pub formulation: String,
    pub status: String,
    pub record: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub elapsed: f64,
    pub nodes: u64,
    pub file: Option<String>,
}

impl ReportRow {
    fn failed(cell: &Cell, kind: &FormulationKind, msg: impl std::fmt::Display, elapsed: f64) -> Self {
        ReportRow {
            instance: cell.id.clone(),
            n: cell.instance.n(),
            degseq: cell.degseq,
            formulation: kind.to_string(),
            status: format!("error: {msg}"),
            record: None,
            bound: None,
            gap: None,
            elapsed,
            nodes: 0,
            file: None,
        }
    }

    pub fn timed_out(&self) -> bool {
        matches!(self.status.as_str(), "feasible_time_limit" | "node_limit")
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// A concrete instance with the ids it carries into the report.
#[derive(Debug, Clone)]
pub struct Cell {
    pub id: String,
    pub degseq: usize,
    pub instance: Instance,
}

fn degseq_seed(seed: u64, n: usize, k: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((n as u64) << 20).wrapping_add(k as u64)
}

fn push_degseqs(req: &RequirementsMatrix, id: &str, n: usize, seed: u64, cfg: &ExperimentConfig, out: &mut Vec<Cell>) -> Result<()> {
    for k in 0..cfg.degseqs_per_n.max(1) {
        let d = random_arborescent_degree_sequence(n, None, degseq_seed(seed, n, k))
            .map_err(|e| BenchError::Config(e.to_string()))?;
        let instance = Instance::complete(req.clone(), d).map_err(|e| BenchError::Config(e.to_string()))?;
        out.push(Cell { id: id.to_string(), degseq: k, instance });
    }
    Ok(())
}

/// Expands the sources into concrete instances, in a fixed order.
pub fn expand_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for src in &cfg.sources {
        match src {
            InstanceSource::Generator { pool, density } => {
                for &n in &cfg.sizes {
                    for &seed in &cfg.seeds {
                        let base = generate_instance(n, *pool, *density, None, seed)
                            .map_err(|e| BenchError::Config(format!("generator, n = {n}, seed {seed}: {e}")))?;
                        push_degseqs(base.requirements(), &format!("gen-n{n}-s{seed}"), n, seed, cfg, &mut out)?;
                    }
                }
            }
            InstanceSource::OdMatrix { path } => {
                let text = fs::read_to_string(path)?;
                let req = load_od_matrix(&text)
                    .map_err(|e| BenchError::Source { path: path.clone(), msg: e.to_string() })?;
                let label = path.file_stem().map_or("od".into(), |s| s.to_string_lossy().into_owned());
                for &n in &cfg.sizes {
                    for &seed in &cfg.seeds {
                        let sub = random_connected_submatrix(&req, n, seed)
                            .map_err(|e| BenchError::Source { path: path.clone(), msg: e.to_string() })?;
                        push_degseqs(&sub, &format!("{label}-n{n}-s{seed}"), n, seed, cfg, &mut out)?;
                    }
                }
            }
            InstanceSource::Instance { path } => {
                let text = fs::read_to_string(path)?;
                let instance = Instance::from_json(&text)
                    .map_err(|e| BenchError::Source { path: path.clone(), msg: e.to_string() })?;
                let id = path.file_stem().map_or("instance".into(), |s| s.to_string_lossy().into_owned());
                out.push(Cell { id, degseq: 0, instance });
            }
        }
    }
    Ok(out)
}

fn lp_file_name(cell: &Cell, kind: &FormulationKind) -> String {
    let tag: String = kind.to_string().chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' }).collect();
    format!("{}-d{}-{}.lp", cell.id, cell.degseq, tag)
}

/// Runs one cell. Failures become an `error: ...` status.
pub fn run_cell(cell: &Cell, kind: &FormulationKind, cfg: &ExperimentConfig) -> ReportRow {
    let start = Instant::now();
    let inst = &cell.instance;
    let row = |status: &str, record: Option<f64>, bound: Option<f64>, nodes: u64, file: Option<String>| {
        let gap = match (record, bound) {
            (Some(r), Some(b)) => finite(relative_gap(r, b)),
            _ => None,
        };
        ReportRow {
            instance: cell.id.clone(),
            n: inst.n(),
            degseq: cell.degseq,
            formulation: kind.to_string(),
            status: status.to_string(),
            record,
            bound,
            gap,
            elapsed: start.elapsed().as_secs_f64(),
            nodes,
            file,
        }
    };
    if kind.tag() == Tag::F0Q {
        if cfg.target == SolverTarget::LpExport {
            return ReportRow::failed(cell, kind, "F0Q is a family of assignment problems with no single model", 0.0);
        }
        return match f0q_optimum(inst, LeafSolver::Auto, EnumerationBudget::default()) {
            Ok(r) => row("optimal", Some(r.cost), Some(r.cost), r.trees_examined, None),
            Err(e) => ReportRow::failed(cell, kind, e, start.elapsed().as_secs_f64()),
        };
    }
    let built = build(inst, kind).and_then(|m| if cfg.cuts { attach_search_space_cuts(&m, inst) } else { Ok(m) });
    let model = match built.map_err(|e| e.to_string()).and_then(|m| linearize(&m).map_err(|e| e.to_string())) {
        Ok(m) => m,
        Err(e) => return ReportRow::failed(cell, kind, e, start.elapsed().as_secs_f64()),
    };
    if cfg.target == SolverTarget::LpExport {
        let Some(dir) = &cfg.out_dir else {
            return ReportRow::failed(cell, kind, "lp export needs an output directory", 0.0);
        };
        let path = dir.join(lp_file_name(cell, kind));
        let written = export_lp(&model)
            .map_err(|e| e.to_string())
            .and_then(|text| fs::write(&path, text).map_err(|e| e.to_string()));
        return match written {
            Ok(()) => row("exported", None, None, 0, Some(path.display().to_string())),
            Err(e) => ReportRow::failed(cell, kind, e, start.elapsed().as_secs_f64()),
        };
    }
    let mut params = SolveParams { time_limit: cfg.time_limit, abs_gap_tol: cfg.gap_tol, ..SolveParams::default() };
    if cfg.init == Initialization::LocalSearch {
        if let Ok(t) = initial_tree(inst, 0) {
            let t = local_search(&t, inst, &NeighborhoodSpec::default());
            params.incumbent = lift_into(&t, inst, &model).ok();
        }
    }
    match solve_mip(&model, &params) {
        Ok(r) => row(r.status.as_str(), r.objective(), finite(r.bound), r.nodes, None),
        Err(e) => ReportRow::failed(cell, kind, e, start.elapsed().as_secs_f64()),
    }
}

struct Sink {
    csv: Option<csv::Writer<fs::File>>,
}

impl Sink {
    fn push(&mut self, row: &ReportRow) -> Result<()> {
        if let Some(w) = &mut self.csv {
            w.serialize(row)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Runs the full grid on `cfg.workers` threads. Rows come back in grid
/// order; `rows.csv` grows as cells finish and `rows.json` is written last.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let kinds = cfg.validate()?;
    let cells = expand_cells(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..kinds.len()).map(move |k| (c, k))).collect();
    let csv = match &cfg.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Some(csv::Writer::from_path(dir.join("rows.csv"))?)
        }
        None => None,
    };
    let sink = Mutex::new(Sink { csv });
    let results: Mutex<Vec<Option<ReportRow>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<BenchError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(jobs.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, k)) = jobs.get(i) else { break };
                let row = run_cell(&cells[c], &kinds[k], cfg);
                if let Err(e) = sink.lock().expect("sink").push(&row) {
                    failure.lock().expect("failure").get_or_insert(e);
                }
                results.lock().expect("results")[i] = Some(row);
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("failure") {
        return Err(e);
    }
    let rows: Vec<ReportRow> = results.into_inner().expect("results").into_iter().map(|r| r.expect("every job ran")).collect();
    if let Some(dir) = &cfg.out_dir {
        write_json(&dir.join("rows.json"), &rows)?;
    }
    Ok(rows)
}

pub fn write_json(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, rows)?;
    writeln!(f)?;
    Ok(())
}

/// Reads rows back from a `.json` or `.csv` report.
pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    if path.extension().is_some_and(|e| e == "csv") {
        let mut r = csv::Reader::from_path(path)?;
        return r.deserialize().map(|row| row.map_err(BenchError::from)).collect();
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub formulation: String,
    pub cells: usize,
    pub median_time: f64,
    pub mean_time: f64,
    pub rank: String,
    pub timeout_fraction: f64,
    pub mean_gap: Option<f64>,
}

pub fn roman(mut k: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for &(v, s) in &TABLE {
        while k >= v {
            out.push_str(s);
            k -= v;
        }
    }
    out
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Per-formulation statistics, ranked by median time (I is fastest).
/// Formulations appear in order of first occurrence.
pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.formulation.as_str()) {
            order.push(&r.formulation);
        }
    }
    let mut out: Vec<SummaryRow> = order
        .iter()
        .map(|&f| {
            let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.formulation == f).collect();
            let mut times: Vec<f64> = mine.iter().map(|r| r.elapsed).collect();
            let mean_time = times.iter().sum::<f64>() / times.len() as f64;
            let gaps: Vec<f64> = mine.iter().filter_map(|r| r.gap).collect();
            SummaryRow {
                formulation: f.to_string(),
                cells: mine.len(),
                median_time: median(&mut times),
                mean_time,
                rank: String::new(),
                timeout_fraction: mine.iter().filter(|r| r.timed_out()).count() as f64 / mine.len() as f64,
                mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
            }
        })
        .collect();
    let mut idx: Vec<usize> = (0..out.len()).collect();
    idx.sort_by(|&a, &b| out[a].median_time.total_cmp(&out[b].median_time).then(out[a].mean_time.total_cmp(&out[b].mean_time)));
    for (place, &i) in idx.iter().enumerate() {
        out[i].rank = roman(place + 1);
    }
    out
}

/// Fixed-width table of a summary.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<16} {:>6} {:>12} {:>12} {:>5} {:>9} {:>10}\n",
        "formulation", "cells", "median, s", "mean, s", "rank", "timeouts", "mean gap"
    );
    for r in summary {
        let gap = r.mean_gap.map_or("-".to_string(), |g| format!("{:.4}", g));
        s.push_str(&format!(
            "{:<16} {:>6} {:>12.3} {:>12.3} {:>5} {:>9.3} {:>10}\n",
            r.formulation, r.cells, r.median_time, r.mean_time, r.rank, r.timeout_fraction, gap
        ));
    }
    s
}
