//! A small mixed-integer linear solver: dense bounded simplex for the
//! relaxations and best-bound branch and bound over the integer columns.

mod presolve;
mod simplex;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde_json::json;

use crate::model::{evaluate, extend_with_products, Assignment, Model, ModelError, DEFAULT_TOL};
use presolve::{presolve, Reduced};
use simplex::{Basis, LpOutcome, Tableau};

pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    /// The simplex could not reach a verified basis.
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One value per model variable; empty unless optimal.
    pub point: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn assignment(&self, model: &Model) -> Assignment {
        Assignment::from_f64_slice(model, &self.point)
    }
}

fn lp_status(o: LpOutcome) -> LpStatus {
    match o {
        LpOutcome::Optimal => LpStatus::Optimal,
        LpOutcome::Infeasible => LpStatus::Infeasible,
        LpOutcome::Unbounded => LpStatus::Unbounded,
        LpOutcome::TimeLimit => LpStatus::TimeLimit,
        LpOutcome::IterationLimit | LpOutcome::Numerical | LpOutcome::Stalled => LpStatus::Numerical,
    }
}

fn tableau(r: &Reduced) -> Tableau {
    Tableau::new(r.cols.len(), r.rows.clone(), r.cost.clone(), &r.lb, &r.ub, &r.row_lo, &r.row_hi)
}

/// Solves the continuous relaxation, ignoring integrality marks.
pub fn solve_lp(model: &Model) -> Result<LpSolution, ModelError> {
    if !model.is_linear() {
        return Err(ModelError::Bilinear);
    }
    let Some(red) = presolve(model, false) else {
        return Ok(LpSolution { status: LpStatus::Infeasible, point: Vec::new(), objective: f64::NAN });
    };
    let mut tab = tableau(&red);
    let status = lp_status(tab.solve(false, None));
    if status != LpStatus::Optimal {
        return Ok(LpSolution { status, point: Vec::new(), objective: f64::NAN });
    }
    let objective = tab.objective() + red.offset;
    Ok(LpSolution { status, point: red.expand(tab.values()), objective })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    /// Seconds; infinite means no limit.
    pub time_limit: f64,
    pub abs_gap_tol: f64,
    pub rel_gap_tol: f64,
    /// A feasible point to start from.
    pub incumbent: Option<Assignment>,
    pub node_limit: Option<u64>,
    /// Only points strictly better than this value are of interest.
    pub cutoff: Option<f64>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            time_limit: f64::INFINITY,
            abs_gap_tol: 1e-4,
            rel_gap_tol: 0.0,
            incumbent: None,
            node_limit: None,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    Infeasible,
    Unbounded,
    NodeLimit,
    /// A relaxation failed to solve reliably; the bound is not proven.
    Numerical,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleTimeLimit => "feasible_time_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::Numerical => "numerical",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub assignment: Assignment,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLine {
    pub elapsed: f64,
    pub nodes: u64,
    pub record: f64,
    pub bound: f64,
    pub gap: f64,
}

impl fmt::Display for LogLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:9.3}s {:8} nodes  record {:>14}  bound {:>14}  gap {}",
            self.elapsed,
            self.nodes,
            fmt_num(self.record),
            fmt_num(self.bound),
            fmt_num(self.gap)
        )
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub record: Option<Record>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub elapsed: f64,
    pub log: Vec<LogLine>,
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

impl SolveResult {
    pub fn objective(&self) -> Option<f64> {
        self.record.as_ref().map(|r| r.objective)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "status": self.status.as_str(),
            "record": self.objective().map_or(serde_json::Value::Null, finite_or_null),
            "bound": finite_or_null(self.bound),
            "gap": finite_or_null(self.gap),
            "nodes": self.nodes,
            "elapsed": self.elapsed,
        })
    }
}

/// `record / bound - 1`, taken as a relative distance when the bound is not
/// positive.
pub fn relative_gap(record: f64, bound: f64) -> f64 {
    if !record.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    let diff = (record - bound).max(0.0);
    if diff == 0.0 {
        0.0
    } else if bound.abs() < 1e-12 {
        f64::INFINITY
    } else {
        diff / bound.abs()
    }
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    /// Relaxation value of the parent.
    parent: f64,
    /// Column, direction and distance moved by the last branching.
    branch: Option<(usize, bool, f64)>,
    id: u64,
    changes: Vec<(usize, f64, f64)>,
    /// Optimal basis of the parent relaxation.
    basis: Option<Rc<Basis>>,
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
    // Max-heap order: lowest bound first, then lowest id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a Model,
    red: Reduced,
    start: Instant,
    record: f64,
    best: Option<Record>,
    bound: f64,
    nodes: u64,
    log: Vec<LogLine>,
}

impl Search<'_> {
    fn note(&mut self) {
        self.log.push(LogLine {
            elapsed: self.start.elapsed().as_secs_f64(),
            nodes: self.nodes,
            record: self.record,
            bound: self.bound,
            gap: relative_gap(self.record, self.bound),
        });
    }

    fn raise_bound(&mut self, b: f64) {
        let b = b.min(self.record);
        if b > self.bound {
            self.bound = b;
            self.note();
        }
    }

    fn offer(&mut self, x: &[f64]) {
        let mut full = self.red.expand(x);
        for (v, var) in self.model.vars().iter().enumerate() {
            if var.kind.is_integral() {
                full[v] = full[v].round();
            }
            full[v] = full[v].clamp(var.lb, var.ub);
        }
        // Continuous values next to an integer are usually round-off.
        let snapped: Vec<f64> = full
            .iter()
            .map(|&v| if (v - v.round()).abs() <= INTEGRALITY_TOL { v.round() } else { v })
            .collect();
        let feasible = |p: &[f64]| {
            let a = Assignment::from_f64_slice(self.model, p);
            let ev = evaluate(self.model, &a, 1e-5).ok()?;
            ev.is_feasible().then(|| (ev.objective_f64(), a))
        };
        let Some((obj, a)) = feasible(&snapped).or_else(|| feasible(&full)) else { return };
        if obj < self.record {
            self.record = obj;
            self.best = Some(Record { assignment: a, objective: obj });
            if self.bound > obj {
                self.bound = obj;
            }
            self.note();
        }
    }
}

fn fractional(red: &Reduced, x: &[f64]) -> Vec<usize> {
    (0..red.integer.len())
        .filter(|&k| red.integer[k] && {
            let f = x[k] - x[k].floor();
            f.min(1.0 - f) > INTEGRALITY_TOL
        })
        .collect()
}

/// Strong branching probes per node while some candidate is unreliable.
const PROBES: usize = 8;
/// Observations per direction before a pseudocost is trusted.
const RELIABLE: u32 = 2;

/// Objective gain per unit of bound change, per column and direction.
struct Pseudocosts {
    sum: [Vec<f64>; 2],
    count: [Vec<u32>; 2],
}

impl Pseudocosts {
    fn new(k: usize) -> Self {
        Pseudocosts { sum: [vec![0.0; k], vec![0.0; k]], count: [vec![0; k], vec![0; k]] }
    }

    fn record(&mut self, k: usize, up: bool, gain: f64) {
        let d = usize::from(up);
        self.sum[d][k] += gain.max(0.0);
        self.count[d][k] += 1;
    }

    fn reliable(&self, k: usize) -> bool {
        self.count[0][k] >= RELIABLE && self.count[1][k] >= RELIABLE
    }

    fn mean(&self, d: usize) -> f64 {
        let (s, c) = (self.sum[d].iter().sum::<f64>(), self.count[d].iter().sum::<u32>());
        if c == 0 {
            1.0
        } else {
            s / c as f64
        }
    }

    fn estimate(&self, k: usize, d: usize, fallback: f64) -> f64 {
        if self.count[d][k] == 0 {
            fallback
        } else {
            self.sum[d][k] / self.count[d][k] as f64
        }
    }
}

fn score(down: f64, up: f64) -> f64 {
    down.max(1e-6) * up.max(1e-6)
}

/// Outcome of tentatively solving a child relaxation.
enum Probe {
    Bound(f64),
    Infeasible,
    Unknown,
}

fn probe(tab: &Tableau, lb: &[f64], ub: &[f64], k: usize, (lo, hi): (f64, f64), offset: f64, deadline: Option<Instant>) -> Probe {
    let mut t = tab.clone();
    let (mut l, mut u) = (lb.to_vec(), ub.to_vec());
    l[k] = lo;
    u[k] = hi;
    t.set_bounds(&l, &u);
    match t.solve(true, deadline) {
        LpOutcome::Optimal => Probe::Bound(t.objective() + offset),
        LpOutcome::Infeasible => Probe::Infeasible,
        _ => Probe::Unknown,
    }
}

fn incumbent_value(model: &Model, a: &Assignment) -> Option<f64> {
    let full = if a.is_complete_for(model) { a.clone() } else { extend_with_products(model, a).ok()? };
    let ev = evaluate(model, &full, DEFAULT_TOL).ok()?;
    ev.is_feasible().then(|| ev.objective_f64())
}

/// Branch and bound on a linear model with integrality marks.
pub fn solve_mip(model: &Model, params: &SolveParams) -> Result<SolveResult, ModelError> {
    if !model.is_linear() {
        return Err(ModelError::Bilinear);
    }
    let start = Instant::now();
    let deadline = (params.time_limit.is_finite() && params.time_limit >= 0.0)
        .then(|| start + Duration::from_secs_f64(params.time_limit));
    let finish = |s: Search, status: SolveStatus| {
        let mut bound = s.bound;
        if s.best.is_some() && bound > s.record {
            bound = s.record;
        }
        SolveResult {
            status,
            gap: relative_gap(s.record, bound),
            record: s.best,
            bound,
            nodes: s.nodes,
            elapsed: s.start.elapsed().as_secs_f64(),
            log: s.log,
        }
    };
    let Some(red) = presolve(model, true) else {
        return Ok(SolveResult {
            status: SolveStatus::Infeasible,
            record: None,
            bound: f64::INFINITY,
            gap: f64::INFINITY,
            nodes: 0,
            elapsed: start.elapsed().as_secs_f64(),
            log: Vec::new(),
        });
    };
    let mut s = Search {
        model,
        start,
        record: params.cutoff.unwrap_or(f64::INFINITY),
        best: None,
        bound: f64::NEG_INFINITY,
        nodes: 0,
        log: Vec::new(),
        red,
    };
    if let Some(a) = &params.incumbent {
        if let Some(v) = incumbent_value(model, a) {
            if v < s.record {
                let full = if a.is_complete_for(model) { a.clone() } else { extend_with_products(model, a)? };
                s.record = v;
                s.best = Some(Record { assignment: full, objective: v });
                s.note();
            }
        }
    }
    let mut tab = tableau(&s.red);
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        parent: f64::NEG_INFINITY,
        branch: None,
        id: 0,
        changes: Vec::new(),
        basis: None,
    });
    let mut next_id = 1u64;
    let mut pruned_min = f64::INFINITY;
    let mut unproven = false;
    let (mut lb, mut ub) = (s.red.lb.clone(), s.red.ub.clone());
    let mut pc = Pseudocosts::new(s.red.integer.len());
    let integral = s.red.integral_objective();
    let round = |v: f64| if integral && v.is_finite() { (v - 1e-6).ceil() } else { v };

    let status = loop {
        let Some(node) = heap.pop() else {
            let b = pruned_min.min(s.record);
            s.raise_bound(b);
            break if unproven {
                SolveStatus::Numerical
            } else if s.best.is_some() {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
        };
        if node.bound >= s.record - params.abs_gap_tol {
            pruned_min = pruned_min.min(node.bound);
            heap.clear();
            continue;
        }
        s.raise_bound(node.bound);
        if s.best.is_some() && !unproven {
            let closed = s.record - s.bound <= params.abs_gap_tol
                || (params.rel_gap_tol > 0.0 && relative_gap(s.record, s.bound) <= params.rel_gap_tol);
            if closed {
                break SolveStatus::Optimal;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            break SolveStatus::FeasibleTimeLimit;
        }
        if params.node_limit.is_some_and(|k| s.nodes >= k) {
            heap.push(node);
            break SolveStatus::NodeLimit;
        }

        lb.copy_from_slice(&s.red.lb);
        ub.copy_from_slice(&s.red.ub);
        for &(k, l, u) in &node.changes {
            lb[k] = l;
            ub[k] = u;
        }
        tab.set_bounds(&lb, &ub);
        if let Some(b) = &node.basis {
            if !tab.dual_feasible() {
                tab.load_basis(b);
            }
        }
        let mut out = tab.solve(s.nodes > 0, deadline);
        if out == LpOutcome::Numerical {
            tab = tableau(&s.red);
            tab.set_bounds(&lb, &ub);
            out = tab.solve(false, deadline);
        }
        s.nodes += 1;
        match out {
            LpOutcome::Optimal => {}
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded if node.changes.is_empty() => {
                return Ok(finish(s, SolveStatus::Unbounded));
            }
            LpOutcome::TimeLimit => {
                heap.push(node);
                break SolveStatus::FeasibleTimeLimit;
            }
            _ => {
                unproven = true;
                continue;
            }
        }
        let raw = tab.objective() + s.red.offset;
        if let Some((k, up, dist)) = node.branch {
            pc.record(k, up, (raw - node.parent) / dist);
        }
        let value = round(raw.max(node.bound));
        if value >= s.record - params.abs_gap_tol {
            pruned_min = pruned_min.min(value);
            continue;
        }
        let x = tab.values().to_vec();
        let cands = fractional(&s.red, &x);
        if cands.is_empty() {
            s.offer(&x);
            if s.record > value + params.abs_gap_tol {
                // rounding broke feasibility; keep the subproblem bounded
                pruned_min = pruned_min.min(value);
                unproven = true;
            }
            continue;
        }

        let (mean_down, mean_up) = (pc.mean(0), pc.mean(1));
        let dist = |k: usize| {
            let f = x[k] - x[k].floor();
            [f, 1.0 - f]
        };
        let estimate = |pc: &Pseudocosts, k: usize| {
            let [fd, fu] = dist(k);
            score(fd * pc.estimate(k, 0, mean_down), fu * pc.estimate(k, 1, mean_up))
        };
        let mut order = cands.clone();
        order.sort_by(|&a, &b| estimate(&pc, b).total_cmp(&estimate(&pc, a)));
        let (mut pick, mut child, mut best) = (order[0], [value, value], f64::NEG_INFINITY);
        let mut probed = 0;
        for &k in &order {
            let (sc, got) = if pc.reliable(k) || probed == PROBES {
                (estimate(&pc, k), [value, value])
            } else {
                probed += 1;
                let f = x[k].floor();
                let sides = [(lb[k], f), (f + 1.0, ub[k])];
                let mut got = [value, value];
                for d in 0..2 {
                    match probe(&tab, &lb, &ub, k, sides[d], s.red.offset, deadline) {
                        Probe::Bound(b) => {
                            pc.record(k, d == 1, (b - raw) / dist(k)[d]);
                            got[d] = round(b.max(value));
                        }
                        Probe::Infeasible => got[d] = f64::INFINITY,
                        Probe::Unknown => {}
                    }
                }
                (score(got[0] - raw, got[1] - raw), got)
            };
            if sc > best {
                (pick, child, best) = (k, got, sc);
            }
        }

        let f = x[pick].floor();
        let [fd, fu] = dist(pick);
        let basis = Some(Rc::new(tab.basis()));
        let sides = [(lb[pick], f, fd), (f + 1.0, ub[pick], fu)];
        for (d, &(lo, hi, frac)) in sides.iter().enumerate() {
            if child[d] >= s.record - params.abs_gap_tol {
                if child[d].is_finite() {
                    pruned_min = pruned_min.min(child[d]);
                }
                continue;
            }
            let mut changes = node.changes.clone();
            changes.push((pick, lo, hi));
            heap.push(Node {
                bound: child[d],
                parent: raw,
                branch: Some((pick, d == 1, frac)),
                id: next_id,
                changes,
                basis: basis.clone(),
            });
            next_id += 1;
        }
    };
    if matches!(status, SolveStatus::FeasibleTimeLimit | SolveStatus::NodeLimit) {
        let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        s.raise_bound(open.min(pruned_min));
    }
    Ok(finish(s, status))
}
