use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ocst_core::exact::{self, EnumerationBudget, LeafSolver};
use ocst_core::formulations::{attach_search_space_cuts, build, extract_tree, FormulationKind, Tag};
use ocst_core::graph::{self, DegreeSequence, LabeledTree, PruferCode, RequirementsMatrix};
use ocst_core::heuristics::{self, NeighborhoodSpec, MoveKind, Strategy};
use ocst_core::instance;
use ocst_core::milp::{solve_mip, SolveParams};
use ocst_core::model::{export_lp, linearize};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn make_tree(n: usize, edges: Vec<(usize, usize)>) -> PyResult<LabeledTree> {
    LabeledTree::new(n, edges).map_err(value_err)
}

/// A requirements matrix, degree sequence and admissible edge set.
#[pyclass(name = "Instance", module = "ocst")]
struct PyInstance {
    inner: instance::Instance,
}

#[pymethods]
impl PyInstance {
    /// Complete-graph instance from a requirements matrix and degrees.
    #[new]
    fn new(mu: Vec<Vec<f64>>, degrees: Vec<usize>) -> PyResult<Self> {
        let req = RequirementsMatrix::from_rows(mu).map_err(value_err)?;
        let d = DegreeSequence::new(degrees).map_err(value_err)?;
        Ok(PyInstance { inner: instance::Instance::complete(req, d).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, pool = 30, density = 0.6))]
    fn generate(n: usize, seed: u64, pool: usize, density: f64) -> PyResult<Self> {
        Ok(PyInstance { inner: instance::generate_instance(n, pool, density, None, seed).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyInstance { inner: instance::Instance::from_json(text).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees().as_slice().to_vec()
    }

    #[getter]
    fn requirements(&self) -> Vec<Vec<f64>> {
        self.inner.requirements().rows()
    }

    fn cost(&self, edges: Vec<(usize, usize)>) -> PyResult<f64> {
        let t = make_tree(self.inner.n(), edges)?;
        Ok(self.inner.cost(&t))
    }

    fn is_admissible(&self, edges: Vec<(usize, usize)>) -> bool {
        make_tree(self.inner.n(), edges).is_ok_and(|t| self.inner.is_admissible_tree(&t))
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, degrees={:?})", self.inner.n(), self.inner.degrees().as_slice())
    }
}

/// Ordered-pair communication cost of a tree under `mu`.
#[pyfunction]
fn communication_cost(edges: Vec<(usize, usize)>, mu: Vec<Vec<f64>>) -> PyResult<f64> {
    let req = RequirementsMatrix::from_rows(mu).map_err(value_err)?;
    let t = make_tree(req.n(), edges)?;
    graph::communication_cost(&t, &req, None).map_err(value_err)
}

#[pyfunction]
fn prufer_encode(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Vec<usize>> {
    Ok(graph::prufer_encode(&make_tree(n, edges)?).as_slice().to_vec())
}

#[pyfunction]
fn prufer_decode(n: usize, code: Vec<usize>) -> PyResult<Vec<(usize, usize)>> {
    let code = PruferCode::new(n, code).map_err(value_err)?;
    Ok(graph::prufer_decode(&code).edges().to_vec())
}

#[pyfunction]
fn count_trees(degrees: Vec<usize>) -> PyResult<u128> {
    Ok(exact::count_trees(&DegreeSequence::new(degrees).map_err(value_err)?))
}

/// `(cost, edges)` of an optimal tree, by full enumeration or, with
/// `f0q=True`, by defoliated trees and leaf assignment.
#[pyfunction]
#[pyo3(signature = (inst, f0q = false, max_trees = 10_000_000))]
fn oracle(inst: &PyInstance, f0q: bool, max_trees: u128) -> PyResult<(f64, Vec<(usize, usize)>)> {
    let budget = EnumerationBudget { max_trees };
    let r = if f0q {
        exact::f0q_optimum(&inst.inner, LeafSolver::Auto, budget)
    } else {
        exact::brute_force_optimum(&inst.inner, budget)
    }
    .map_err(value_err)?;
    Ok((r.cost, r.tree.edges().to_vec()))
}

fn parse_kind(kind: &str) -> PyResult<FormulationKind> {
    kind.parse().map_err(value_err)
}

/// LP text of the linearized model.
#[pyfunction]
#[pyo3(signature = (inst, kind, cuts = false))]
fn build_lp(inst: &PyInstance, kind: &str, cuts: bool) -> PyResult<String> {
    let kind = parse_kind(kind)?;
    let mut m = build(&inst.inner, &kind).map_err(value_err)?;
    if cuts {
        m = attach_search_space_cuts(&m, &inst.inner).map_err(value_err)?;
    }
    export_lp(&linearize(&m).map_err(value_err)?).map_err(value_err)
}

/// Solves one formulation; returns status, record, bound, gap, nodes,
/// elapsed and the tree when a record exists.
#[pyfunction]
#[pyo3(signature = (inst, kind, time_limit = f64::INFINITY, gap_tol = 1e-4))]
fn solve<'py>(py: Python<'py>, inst: &PyInstance, kind: &str, time_limit: f64, gap_tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let kind = parse_kind(kind)?;
    let out = PyDict::new(py);
    if kind.tag() == Tag::F0Q {
        let r = exact::f0q_optimum(&inst.inner, LeafSolver::Auto, EnumerationBudget::default()).map_err(value_err)?;
        out.set_item("status", "optimal")?;
        out.set_item("record", r.cost)?;
        out.set_item("bound", r.cost)?;
        out.set_item("tree", r.tree.edges().to_vec())?;
        return Ok(out);
    }
    let model = linearize(&build(&inst.inner, &kind).map_err(value_err)?).map_err(value_err)?;
    let params = SolveParams { time_limit, abs_gap_tol: gap_tol, ..SolveParams::default() };
    let r = py.detach(|| solve_mip(&model, &params)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    out.set_item("status", r.status.as_str())?;
    out.set_item("record", r.objective())?;
    out.set_item("bound", r.bound)?;
    out.set_item("gap", r.gap)?;
    out.set_item("nodes", r.nodes)?;
    out.set_item("elapsed", r.elapsed)?;
    if let Some(rec) = &r.record {
        if let Ok(t) = extract_tree(&rec.assignment, &inst.inner, &kind) {
            out.set_item("tree", t.edges().to_vec())?;
        }
    }
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (inst, seed = 0))]
fn initial_tree(inst: &PyInstance, seed: u64) -> PyResult<Vec<(usize, usize)>> {
    Ok(heuristics::initial_tree(&inst.inner, seed).map_err(value_err)?.edges().to_vec())
}

/// Local search from `edges`, or from the greedy start when omitted.
/// Returns `(cost, edges, trace)` with trace entries `(step, move, cost)`.
#[pyfunction]
#[pyo3(signature = (inst, edges = None, first_improvement = false, exchange = true, swap = true))]
fn local_search(
    inst: &PyInstance,
    edges: Option<Vec<(usize, usize)>>,
    first_improvement: bool,
    exchange: bool,
    swap: bool,
) -> PyResult<(f64, Vec<(usize, usize)>, Vec<(usize, String, f64)>)> {
    let start = match edges {
        Some(e) => make_tree(inst.inner.n(), e)?,
        None => heuristics::initial_tree(&inst.inner, 0).map_err(value_err)?,
    };
    let mut moves = Vec::new();
    if exchange {
        moves.push(MoveKind::TwoEdgeExchange);
    }
    if swap {
        moves.push(MoveKind::EqualDegreeLabelSwap);
    }
    let strategy = if first_improvement { Strategy::FirstImprovement } else { Strategy::BestImprovement };
    let spec = NeighborhoodSpec::new(moves, strategy).map_err(value_err)?;
    let out = heuristics::local_search_traced(&start, &inst.inner, &spec);
    let trace = out.trace.iter().map(|s| (s.step, s.mv.to_string(), s.cost)).collect();
    Ok((out.cost, out.tree.edges().to_vec(), trace))
}

#[pymodule]
fn ocst(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(communication_cost, m)?)?;
    m.add_function(wrap_pyfunction!(prufer_encode, m)?)?;
    m.add_function(wrap_pyfunction!(prufer_decode, m)?)?;
    m.add_function(wrap_pyfunction!(count_trees, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(build_lp, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(initial_tree, m)?)?;
    m.add_function(wrap_pyfunction!(local_search, m)?)?;
    Ok(())
}
