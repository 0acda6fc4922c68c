//! Problem instances and their generators.
//!
//! An instance is an admissible edge set over `1..=n`, a requirements matrix,
//! optional edge lengths and a target degree sequence. Edges between two
//! leaves are dropped at construction whenever `n >= 3`, since no spanning
//! tree on three or more vertices can use them.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ordered_pair, DegreeSequence, EdgeLengths, GraphError, LabeledTree, RequirementsMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex {vertex} needs degree {degree} but has only {available} admissible neighbors")]
    Incompatible { vertex: usize, degree: usize, available: usize },
    #[error("edge {{{0}, {1}}} has no positive length")]
    MissingLength(usize, usize),
    #[error("table: {0}")]
    Table(String),
    #[error("negative entry {value} at row {row}, column {col}")]
    Negative { row: usize, col: usize, value: f64 },
    #[error("no connected support component with {0} vertices")]
    NoComponent(usize),
    #[error("no degree sequence on {n} vertices with {internal} internal vertices of degree 2..=5")]
    InfeasibleDegrees { n: usize, internal: usize },
    #[error("bisection weights must be a 2m x 2m matrix with m >= 2, got {0} rows")]
    BisectionSize(usize),
    #[error("negative vertex weight {0}")]
    NegativeWeight(f64),
    #[error("instance file: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, InstanceError>;

/// Admissible edge set given at construction time.
#[derive(Debug, Clone, PartialEq)]
pub enum Admissible {
    Complete,
    Edges(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    req: RequirementsMatrix,
    lengths: Option<EdgeLengths>,
    degrees: DegreeSequence,
}

impl Instance {
    pub fn new(
        req: RequirementsMatrix,
        degrees: DegreeSequence,
        admissible: Admissible,
        lengths: Option<EdgeLengths>,
    ) -> Result<Self> {
        let n = degrees.n();
        if req.n() != n {
            return Err(GraphError::DimensionMismatch { expected: n, got: req.n() }.into());
        }
        let candidates: BTreeSet<(usize, usize)> = match admissible {
            Admissible::Complete => (1..=n).flat_map(|i| ((i + 1)..=n).map(move |j| (i, j))).collect(),
            Admissible::Edges(list) => {
                let mut set = BTreeSet::new();
                for (a, b) in list {
                    for v in [a, b] {
                        if v == 0 || v > n {
                            return Err(GraphError::VertexOutOfRange(v, n).into());
                        }
                    }
                    if a == b {
                        return Err(GraphError::SelfLoop(a).into());
                    }
                    set.insert(ordered_pair(a, b));
                }
                set
            }
        };
        let edges: Vec<(usize, usize)> = candidates
            .into_iter()
            .filter(|&(i, j)| n < 3 || !(degrees.is_leaf(i) && degrees.is_leaf(j)))
            .collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i - 1].push(j);
            neighbors[j - 1].push(i);
        }
        for row in &mut neighbors {
            row.sort_unstable();
        }
        for v in 1..=n {
            let available = neighbors[v - 1].len();
            if degrees.degree(v) > available {
                return Err(InstanceError::Incompatible { vertex: v, degree: degrees.degree(v), available });
            }
        }
        if let Some(l) = &lengths {
            for &(i, j) in &edges {
                match l.get(i, j) {
                    Some(t) if t > 0.0 && t.is_finite() => {}
                    _ => return Err(InstanceError::MissingLength(i, j)),
                }
            }
        }
        // Unit lengths everywhere are the plain hop-count problem.
        let lengths = lengths.filter(|l| !edges.iter().all(|&(i, j)| l.get(i, j) == Some(1.0)));
        Ok(Instance { n, edges, neighbors, req, lengths, degrees })
    }

    pub fn complete(req: RequirementsMatrix, degrees: DegreeSequence) -> Result<Self> {
        Instance::new(req, degrees, Admissible::Complete, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Admissible edges `(i, j)`, `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v - 1]
    }

    pub fn is_admissible_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.neighbors[i - 1].binary_search(&j).is_ok()
    }

    pub fn requirements(&self) -> &RequirementsMatrix {
        &self.req
    }

    pub fn lengths(&self) -> Option<&EdgeLengths> {
        self.lengths.as_ref()
    }

    pub fn is_weighted(&self) -> bool {
        self.lengths.is_some()
    }

    pub fn length(&self, i: usize, j: usize) -> f64 {
        self.lengths.as_ref().and_then(|l| l.get(i, j)).unwrap_or(1.0)
    }

    pub fn degrees(&self) -> &DegreeSequence {
        &self.degrees
    }

    /// Tree uses only admissible edges and matches the degree sequence.
    pub fn is_admissible_tree(&self, tree: &LabeledTree) -> bool {
        tree.n() == self.n
            && tree.edges().iter().all(|&(i, j)| self.is_admissible_edge(i, j))
            && tree.degrees() == self.degrees.as_slice()
    }

    pub fn cost(&self, tree: &LabeledTree) -> f64 {
        crate::graph::communication_cost(tree, &self.req, self.lengths()).expect("tree matches instance size")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))?;
        file.try_into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum EdgesField {
    Shorthand(String),
    List(Vec<(usize, usize)>),
}

/// On-disk form of an [`Instance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    edges: EdgesField,
    mu: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lengths: Option<Vec<(usize, usize, f64)>>,
    degrees: Vec<usize>,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            n: inst.n,
            edges: EdgesField::List(inst.edges.clone()),
            mu: inst.req.rows(),
            lengths: inst.lengths.as_ref().map(|l| l.iter().map(|((i, j), t)| (i, j, t)).collect()),
            degrees: inst.degrees.as_slice().to_vec(),
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = InstanceError;
    fn try_from(f: InstanceFile) -> Result<Self> {
        let req = RequirementsMatrix::from_rows(f.mu)?;
        let degrees = DegreeSequence::new(f.degrees)?;
        if degrees.n() != f.n {
            return Err(GraphError::DimensionMismatch { expected: f.n, got: degrees.n() }.into());
        }
        let admissible = match f.edges {
            EdgesField::Shorthand(s) if s == "complete" => Admissible::Complete,
            EdgesField::Shorthand(s) => return Err(InstanceError::Json(format!("unknown edge shorthand {s:?}"))),
            EdgesField::List(l) => Admissible::Edges(l),
        };
        let lengths = f.lengths.map(|l| l.into_iter().map(|(i, j, t)| ((i, j), t)).collect());
        Instance::new(req, degrees, admissible, lengths)
    }
}

/// Parses a delimiter-separated square table (commas or whitespace) into a
/// symmetric requirements matrix `mu'_ij = mu_ij + mu_ji` with a zero diagonal.
/// A first line with any non-numeric token is treated as a header. A leading
/// non-numeric column (row labels) is dropped as well.
pub fn load_od_matrix(text: &str) -> Result<RequirementsMatrix> {
    let mut rows: Vec<Vec<&str>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(|c: char| c == ',' || c == ';' || c == '\t' || c == ' ').map(str::trim).filter(|t| !t.is_empty()).collect())
        .collect();
    let numeric = |t: &str| t.parse::<f64>().is_ok();
    if rows.first().is_some_and(|r| r.iter().any(|t| !numeric(t))) {
        rows.remove(0);
    }
    if !rows.is_empty() && rows.iter().all(|r| r.first().is_some_and(|t| !numeric(t))) {
        for r in &mut rows {
            r.remove(0);
        }
    }
    let n = rows.len();
    let mut raw = vec![vec![0.0; n]; n];
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(InstanceError::Table(format!("row {} has {} entries, expected {n}", i + 1, r.len())));
        }
        for (j, tok) in r.iter().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| InstanceError::Table(format!("row {}, column {}: cannot parse {tok:?}", i + 1, j + 1)))?;
            if !v.is_finite() {
                return Err(InstanceError::Table(format!("row {}, column {}: non-finite value", i + 1, j + 1)));
            }
            if v < 0.0 {
                return Err(InstanceError::Negative { row: i + 1, col: j + 1, value: v });
            }
            raw[i][j] = v;
        }
    }
    Ok(RequirementsMatrix::from_fn(n, |i, j| raw[i - 1][j - 1] + raw[j - 1][i - 1])?)
}

/// Principal submatrix on `n` vertices whose support graph is connected,
/// grown as a random ball in the support graph of `req`.
pub fn random_connected_submatrix(req: &RequirementsMatrix, n: usize, seed: u64) -> Result<RequirementsMatrix> {
    Ok(req.principal(&random_connected_labels(req, n, seed)?))
}

/// The vertex labels chosen by [`random_connected_submatrix`], in ascending order.
pub fn random_connected_labels(req: &RequirementsMatrix, n: usize, seed: u64) -> Result<Vec<usize>> {
    let support = req.support();
    let total = req.n();
    if n == 0 || n > total {
        return Err(InstanceError::NoComponent(n));
    }
    // Component sizes of the support graph.
    let mut comp = vec![usize::MAX; total];
    let mut sizes = Vec::new();
    for s in 0..total {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &v in &support[u] {
                if comp[v - 1] == usize::MAX {
                    comp[v - 1] = id;
                    stack.push(v - 1);
                }
            }
        }
        sizes.push(size);
    }
    let starts: Vec<usize> = (0..total).filter(|&v| sizes[comp[v]] >= n).collect();
    if starts.is_empty() || (n > 1 && starts.iter().all(|&v| support[v].is_empty())) {
        return Err(InstanceError::NoComponent(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = starts[rng.gen_range(0..starts.len())];
    let mut chosen = BTreeSet::from([start + 1]);
    let mut frontier: BTreeSet<usize> = support[start].iter().copied().collect();
    while chosen.len() < n {
        let pick = *frontier.iter().nth(rng.gen_range(0..frontier.len())).expect("component is large enough");
        frontier.remove(&pick);
        chosen.insert(pick);
        for &v in &support[pick - 1] {
            if !chosen.contains(&v) {
                frontier.insert(v);
            }
        }
    }
    Ok(chosen.into_iter().collect())
}

/// Feasible internal-vertex counts for `n` vertices when every internal
/// degree lies in `2..=5`.
pub fn internal_count_range(n: usize) -> std::ops::RangeInclusive<usize> {
    // Internal degrees sum to n - 2 + m and each lies in [2, 5].
    let lo = (n.saturating_sub(2)).div_ceil(4).max(1);
    let hi = n.saturating_sub(2).max(1);
    lo..=hi
}

/// Random arborescent sequence with internal degrees uniform in `2..=5`.
///
/// Without a hint, internal degrees are drawn one at a time until the vertex
/// budget is used up (each internal vertex of degree `d` accounts for `d - 1`
/// vertices beyond the first two); the last draw is clipped to fit. With a
/// hint, exactly that many internal degrees are drawn and then repaired to
/// the required sum. Returned in non-decreasing order (leaves first).
pub fn random_arborescent_degree_sequence(n: usize, n_internal_hint: Option<usize>, seed: u64) -> Result<DegreeSequence> {
    if n < 3 {
        return Err(InstanceError::InfeasibleDegrees { n, internal: n_internal_hint.unwrap_or(0) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut internal: Vec<usize> = match n_internal_hint {
        None => {
            let mut left = n - 2;
            let mut out = Vec::new();
            while left > 0 {
                let d = rng.gen_range(2..=5usize).min(left + 1);
                left -= d - 1;
                out.push(d);
            }
            out
        }
        Some(m) => {
            if !internal_count_range(n).contains(&m) {
                return Err(InstanceError::InfeasibleDegrees { n, internal: m });
            }
            let target = n - 2 + m;
            let mut internal: Vec<usize> = (0..m).map(|_| rng.gen_range(2..=5)).collect();
            let mut sum: usize = internal.iter().sum();
            while sum != target {
                let candidates: Vec<usize> =
                    (0..m).filter(|&k| if sum > target { internal[k] > 2 } else { internal[k] < 5 }).collect();
                let Some(&k) = candidates.choose(&mut rng) else {
                    return Err(InstanceError::InfeasibleDegrees { n, internal: m });
                };
                if sum > target {
                    internal[k] -= 1;
                    sum -= 1;
                } else {
                    internal[k] += 1;
                    sum += 1;
                }
            }
            internal
        }
    };
    let m = internal.len();
    internal.sort_unstable();
    let mut d = vec![1; n - m];
    d.extend(internal);
    Ok(DegreeSequence::new(d)?)
}

/// Random integer origin–destination table: each ordered pair carries a flow
/// in `1..=100` with probability `density`, zero otherwise. Not symmetric.
pub fn synthetic_od_table(n: usize, density: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i != j && rng.gen_bool(density.clamp(0.0, 1.0)) { rng.gen_range(1..=100) as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Full generation pipeline: synthetic OD table of size `pool`, a connected
/// principal submatrix of size `n`, a random degree sequence, complete graph.
pub fn generate_instance(n: usize, pool: usize, density: f64, n_internal_hint: Option<usize>, seed: u64) -> Result<Instance> {
    let mut attempt = 0u64;
    loop {
        let table = synthetic_od_table(pool.max(n), density, seed.wrapping_mul(7919).wrapping_add(attempt));
        let req = RequirementsMatrix::from_fn(table.len(), |i, j| table[i - 1][j - 1] + table[j - 1][i - 1])?;
        match random_connected_submatrix(&req, n, seed.wrapping_add(attempt)) {
            Ok(sub) => {
                let d = random_arborescent_degree_sequence(n, n_internal_hint, seed ^ 0x5eed)?;
                return Instance::complete(sub, d);
            }
            Err(InstanceError::NoComponent(_)) if attempt < 64 => attempt += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Two internal hubs of degree `m + 1` and `2m` leaves carrying all requirements.
#[derive(Debug, Clone)]
pub struct BisectionInstance {
    m: usize,
    weights: RequirementsMatrix,
    instance: Instance,
}

impl BisectionInstance {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn weights(&self) -> &RequirementsMatrix {
        &self.weights
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// `sum_{i in S, j not in S} A_ij` over leaf labels `1..=2m`.
    pub fn cut(&self, side: &[usize]) -> f64 {
        let inside: BTreeSet<usize> = side.iter().copied().collect();
        let mut c = 0.0;
        for &i in &inside {
            for j in 1..=2 * self.m {
                if !inside.contains(&j) {
                    c += self.weights.get(i, j);
                }
            }
        }
        c
    }

    /// Ordered-pair cost of any tree placing the leaves `side` on the first
    /// hub: `4 * sum_{i<j} A_ij + 2 * cut(S)`.
    pub fn predicted_cost(&self, side: &[usize]) -> f64 {
        4.0 * self.weights.pair_sum() + 2.0 * self.cut(side)
    }

    /// The tree with `side` on hub `2m + 1` and the rest on hub `2m + 2`.
    pub fn tree_for(&self, side: &[usize]) -> Result<LabeledTree> {
        let m = self.m;
        let inside: BTreeSet<usize> = side.iter().copied().collect();
        let edges = std::iter::once((2 * m + 1, 2 * m + 2))
            .chain((1..=2 * m).map(|v| if inside.contains(&v) { (v, 2 * m + 1) } else { (v, 2 * m + 2) }));
        Ok(LabeledTree::new(2 * m + 2, edges)?)
    }
}

/// Reduces balanced bisection on a `2m x 2m` weight matrix to a
/// fixed-degree instance. The diagonal of `weights` is ignored.
pub fn bisection_reduction(weights: &[Vec<f64>]) -> Result<BisectionInstance> {
    let size = weights.len();
    if size < 4 || size % 2 != 0 || weights.iter().any(|r| r.len() != size) {
        return Err(InstanceError::BisectionSize(size));
    }
    let m = size / 2;
    let mut rows = weights.to_vec();
    for (i, r) in rows.iter_mut().enumerate() {
        r[i] = 0.0;
    }
    let w = RequirementsMatrix::from_rows(rows)?;
    let n = 2 * m + 2;
    let req = RequirementsMatrix::from_fn(n, |i, j| if j <= 2 * m { w.get(i, j) } else { 0.0 })?;
    let mut d = vec![1; 2 * m];
    d.extend([m + 1, m + 1]);
    let instance = Instance::complete(req, DegreeSequence::new(d)?)?;
    Ok(BisectionInstance { m, weights: w, instance })
}

/// `mu_ij = w_i * w_j` off the diagonal.
pub fn product_requirements(weights: &[f64]) -> Result<RequirementsMatrix> {
    if let Some(&w) = weights.iter().find(|&&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(InstanceError::NegativeWeight(w));
    }
    Ok(RequirementsMatrix::from_fn(weights.len(), |i, j| weights[i - 1] * weights[j - 1])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn connected(req: &RequirementsMatrix) -> bool {
        let support = req.support();
        let mut seen = vec![false; req.n()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &support[u] {
                if !seen[v - 1] {
                    seen[v - 1] = true;
                    stack.push(v - 1);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    #[test]
    fn od_matrix_symmetrized() {
        let m = load_od_matrix("0,5,0\n3,0,0\n0,0,0\n").unwrap();
        assert_eq!((m.get(1, 2), m.get(2, 1), m.get(1, 3)), (8.0, 8.0, 0.0));
        assert!(load_od_matrix("0 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0").unwrap().is_zero());
        assert!(matches!(load_od_matrix("0,-1\n0,0"), Err(InstanceError::Negative { .. })));
        assert!(matches!(load_od_matrix("0,1,2\n0,0"), Err(InstanceError::Table(_))));
        let with_header = load_od_matrix("a,b\n0,2\n1,0\n").unwrap();
        assert_eq!(with_header.get(1, 2), 3.0);
        let labeled = load_od_matrix("x,a,b\na,0,2\nb,1,0\n").unwrap();
        assert_eq!(labeled.get(1, 2), 3.0);
    }

    #[test]
    fn submatrix_on_path_support() {
        let path = RequirementsMatrix::from_fn(10, |i, j| if j == i + 1 { 1.0 } else { 0.0 }).unwrap();
        for seed in 0..20 {
            let labels = random_connected_labels(&path, 4, seed).unwrap();
            assert!(labels.windows(2).all(|w| w[1] == w[0] + 1), "{labels:?}");
            assert!(connected(&path.principal(&labels)));
        }
        assert_eq!(random_connected_submatrix(&RequirementsMatrix::zeros(5), 2, 0), Err(InstanceError::NoComponent(2)));
        assert_eq!(random_connected_labels(&path, 4, 7).unwrap(), random_connected_labels(&path, 4, 7).unwrap());
    }

    #[test]
    fn submatrix_audit() {
        let table = synthetic_od_table(30, 0.15, 42);
        let req = RequirementsMatrix::from_fn(30, |i, j| table[i - 1][j - 1] + table[j - 1][i - 1]).unwrap();
        for seed in 0..100 {
            let sub = random_connected_submatrix(&req, 15, seed).unwrap();
            assert_eq!(sub.n(), 15);
            assert!(connected(&sub));
        }
    }

    #[test]
    fn degree_sequence_sampling() {
        let d = random_arborescent_degree_sequence(4, None, 1).unwrap();
        assert!(d.as_slice() == [1, 1, 1, 3] || d.as_slice() == [1, 1, 2, 2], "{d:?}");
        for seed in 0..1000 {
            let d = random_arborescent_degree_sequence(15, None, seed).unwrap();
            assert_eq!(d.as_slice().iter().sum::<usize>(), 28);
            assert!(d.internal().iter().all(|&v| (2..=5).contains(&d.degree(v))));
        }
        assert!(random_arborescent_degree_sequence(10, Some(1), 0).is_err());
        assert!(random_arborescent_degree_sequence(2, None, 0).is_err());
        assert_eq!(random_arborescent_degree_sequence(10, Some(8), 3).unwrap().n_internal(), 8);
    }

    #[test]
    fn leaf_edges_removed_and_compatibility() {
        let d = DegreeSequence::new(vec![2, 2, 1, 1]).unwrap();
        let inst = Instance::complete(RequirementsMatrix::zeros(4), d.clone()).unwrap();
        assert!(!inst.is_admissible_edge(3, 4));
        assert_eq!(inst.edges().len(), 5);
        let sparse = Instance::new(RequirementsMatrix::zeros(4), d, Admissible::Edges(vec![(1, 3), (2, 4)]), None);
        assert!(matches!(sparse, Err(InstanceError::Incompatible { vertex: 1, .. })));
    }

    #[test]
    fn json_round_trip() {
        let inst = generate_instance(6, 12, 0.4, None, 3).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        let text = r#"{"n":3,"edges":"complete","mu":[[0,1,0],[1,0,2],[0,2,0]],"degrees":[1,2,1]}"#;
        let small = Instance::from_json(text).unwrap();
        assert_eq!(small.edges(), &[(1, 2), (2, 3)]);
    }

    #[test]
    fn bisection_identity_by_enumeration() {
        let ones = vec![vec![1.0; 4]; 4];
        let b = bisection_reduction(&ones).unwrap();
        assert_eq!(b.instance().degrees().as_slice(), &[1, 1, 1, 1, 3, 3]);
        for side in [[1, 2], [1, 3], [1, 4], [3, 4]] {
            let t = b.tree_for(&side).unwrap();
            assert_eq!(b.instance().cost(&t), 32.0);
            assert_eq!(b.predicted_cost(&side), 32.0);
        }
        let mut w = vec![vec![1.0; 4]; 4];
        w[0][1] = 10.0;
        w[1][0] = 10.0;
        w[2][3] = 10.0;
        w[3][2] = 10.0;
        let b = bisection_reduction(&w).unwrap();
        let best = [[1, 2], [1, 3], [1, 4]]
            .into_iter()
            .map(|s| (b.instance().cost(&b.tree_for(&s).unwrap()), s))
            .min_by(|a, c| a.0.partial_cmp(&c.0).unwrap())
            .unwrap();
        assert_eq!(best, (4.0 * 24.0 + 2.0 * 4.0, [1, 2]));
        let zero = bisection_reduction(&[vec![0.0; 4], vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]]).unwrap();
        assert_eq!(zero.instance().cost(&zero.tree_for(&[2, 4]).unwrap()), 0.0);
        assert!(bisection_reduction(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).is_err());
        assert!(bisection_reduction(&[vec![0.0, -1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0, 0.0], vec![0.0; 4], vec![0.0; 4]]).is_err());
    }

    #[test]
    fn product_requirement_examples() {
        let a = product_requirements(&[1.0, 1.0, 1.0]).unwrap();
        assert!((1..=3).all(|i| (1..=3).all(|j| a.get(i, j) == if i == j { 0.0 } else { 1.0 })));
        let b = product_requirements(&[0.0, 2.0, 3.0]).unwrap();
        assert_eq!((b.get(2, 3), b.get(1, 2), b.get(1, 3)), (6.0, 0.0, 0.0));
        assert_eq!(product_requirements(&[2.0, 2.0]).unwrap().get(1, 2), 4.0);
        assert_eq!(product_requirements(&[1.0, -1.0]).unwrap_err(), InstanceError::NegativeWeight(-1.0));
    }
}
