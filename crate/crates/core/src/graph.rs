//! Labeled trees, degree sequences, requirement and distance matrices,
//! Prüfer codes and the communication cost.
//!
//! Vertices are 1-based labels everywhere in the public API. Trees keep their
//! edges as a sorted list of pairs `(i, j)` with `i < j`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("vertex {0} out of range 1..={1}")]
    VertexOutOfRange(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("a tree on {n} vertices needs {expected} edges, got {got}")]
    EdgeCount { n: usize, expected: usize, got: usize },
    #[error("edge set is not connected")]
    Disconnected,
    #[error("a tree needs at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("degree sequence must sum to {expected}, got {got}")]
    NotArborescent { expected: usize, got: usize },
    #[error("degree {degree} of vertex {vertex} outside 1..={max}")]
    DegreeOutOfRange { vertex: usize, degree: usize, max: usize },
    #[error("Prüfer code for n = {n} must have length {expected}, got {got}")]
    CodeLength { n: usize, expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("requirements matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("requirements matrix has a non-zero diagonal at {0}")]
    NonZeroDiagonal(usize),
    #[error("invalid value {value} at ({i}, {j})")]
    InvalidValue { i: usize, j: usize, value: f64 },
    #[error("missing or non-positive length on edge {{{0}, {1}}}")]
    BadLength(usize, usize),
    #[error("tree text: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Normalizes an unordered pair to `(min, max)`.
#[inline]
pub fn ordered_pair(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// A spanning tree over vertices `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledTree {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl LabeledTree {
    /// Builds a tree from an edge list in any order or orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        let mut list: Vec<(usize, usize)> = Vec::with_capacity(n - 1);
        for (a, b) in edges {
            for v in [a, b] {
                if v == 0 || v > n {
                    return Err(GraphError::VertexOutOfRange(v, n));
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            list.push(ordered_pair(a, b));
        }
        list.sort_unstable();
        for w in list.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
            }
        }
        if list.len() != n - 1 {
            return Err(GraphError::EdgeCount { n, expected: n - 1, got: list.len() });
        }
        let tree = LabeledTree { n, edges: list };
        // n - 1 edges and connected implies acyclic.
        let mut seen = vec![false; n];
        let adj = tree.adjacency();
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v - 1] {
                    seen[v - 1] = true;
                    count += 1;
                    stack.push(v - 1);
                }
            }
        }
        if count != n {
            return Err(GraphError::Disconnected);
        }
        Ok(tree)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&ordered_pair(i, j)).is_ok()
    }

    /// Neighbor lists indexed by `vertex - 1`, holding 1-based labels in
    /// ascending order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a - 1].push(b);
            adj[b - 1].push(a);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in &self.edges {
            d[a - 1] += 1;
            d[b - 1] += 1;
        }
        d
    }

    /// Applies a vertex relabeling given as `perm[v - 1] = new label of v`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(GraphError::DimensionMismatch { expected: self.n, got: perm.len() });
        }
        LabeledTree::new(self.n, self.edges.iter().map(|&(a, b)| (perm[a - 1], perm[b - 1])))
    }

    /// Text form: `n` on the first line, then one `i j` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| GraphError::Parse("empty input".into()))?
            .parse()
            .map_err(|e| GraphError::Parse(format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for (idx, line) in lines.enumerate() {
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| GraphError::Parse(format!("edge line {}: expected two labels", idx + 2)))?
                    .parse()
                    .map_err(|e| GraphError::Parse(format!("edge line {}: {e}", idx + 2)))
            };
            let a = next()?;
            let b = next()?;
            edges.push((a, b));
        }
        LabeledTree::new(n, edges)
    }

    /// The tree obtained by deleting every leaf (degree-1 vertex), with the
    /// remaining edges kept on their original labels.
    pub fn internal_edges(&self) -> Vec<(usize, usize)> {
        let d = self.degrees();
        self.edges.iter().copied().filter(|&(a, b)| d[a - 1] > 1 && d[b - 1] > 1).collect()
    }
}

impl fmt::Display for LabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}[", self.n)?;
        for (idx, (a, b)) in self.edges.iter().enumerate() {
            if idx > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}-{b}")?;
        }
        write!(f, "]")
    }
}

/// Per-vertex target degrees of a spanning tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DegreeSequence(Vec<usize>);

impl DegreeSequence {
    pub fn new(d: Vec<usize>) -> Result<Self> {
        let n = d.len();
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        for (idx, &deg) in d.iter().enumerate() {
            if deg == 0 || deg > n - 1 {
                return Err(GraphError::DegreeOutOfRange { vertex: idx + 1, degree: deg, max: n - 1 });
            }
        }
        let sum: usize = d.iter().sum();
        if sum != 2 * (n - 1) {
            return Err(GraphError::NotArborescent { expected: 2 * (n - 1), got: sum });
        }
        Ok(DegreeSequence(d))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.0[v - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.0[v - 1] == 1
    }

    pub fn leaves(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn internal(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&v| !self.is_leaf(v)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.0.iter().filter(|&&d| d == 1).count()
    }

    pub fn n_internal(&self) -> usize {
        self.n() - self.n_leaves()
    }

    /// `L = m + 2`, the distance cap used by the distance-based models.
    pub fn max_diameter(&self) -> usize {
        self.n_internal() + 2
    }

    /// Adaptive distance cap: `L - 2` between two internal vertices, `L - 1`
    /// between a leaf and an internal vertex and `L` between two leaves.
    pub fn adaptive_cap(&self, i: usize, j: usize) -> usize {
        let l = self.max_diameter();
        match (self.is_leaf(i), self.is_leaf(j)) {
            (false, false) => l - 2,
            (true, true) => l,
            _ => l - 1,
        }
    }
}

impl TryFrom<Vec<usize>> for DegreeSequence {
    type Error = GraphError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        DegreeSequence::new(v)
    }
}

impl From<DegreeSequence> for Vec<usize> {
    fn from(d: DegreeSequence) -> Self {
        d.0
    }
}

/// Symmetric, non-negative requirements with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RequirementsMatrix {
    n: usize,
    mu: Vec<f64>,
}

impl RequirementsMatrix {
    pub fn zeros(n: usize) -> Self {
        RequirementsMatrix { n, mu: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut mu = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(GraphError::DimensionMismatch { expected: n, got: row.len() });
            }
            mu.extend_from_slice(row);
        }
        let m = RequirementsMatrix { n, mu };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from a closure over unordered pairs `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = RequirementsMatrix::zeros(n);
        for i in 1..=n {
            for j in (i + 1)..=n {
                let v = f(i, j);
                m.mu[(i - 1) * n + (j - 1)] = v;
                m.mu[(j - 1) * n + (i - 1)] = v;
            }
        }
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.mu[i * n + i] != 0.0 {
                return Err(GraphError::NonZeroDiagonal(i + 1));
            }
            for j in 0..n {
                let v = self.mu[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(GraphError::InvalidValue { i: i + 1, j: j + 1, value: v });
                }
                if v != self.mu[j * n + i] {
                    return Err(GraphError::Asymmetric(i + 1, j + 1));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mu[(i - 1) * self.n + (j - 1)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.mu.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Neighbor lists of the support graph `{(i, j) : mu_ij > 0}`.
    pub fn support(&self) -> Vec<Vec<usize>> {
        (1..=self.n)
            .map(|i| (1..=self.n).filter(|&j| j != i && self.get(i, j) > 0.0).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.mu.iter().all(|&v| v == 0.0)
    }

    /// Principal submatrix on the given labels, relabeled `1..=k` in order.
    pub fn principal(&self, labels: &[usize]) -> Self {
        let k = labels.len();
        let mut m = RequirementsMatrix::zeros(k);
        for (a, &i) in labels.iter().enumerate() {
            for (b, &j) in labels.iter().enumerate() {
                m.mu[a * k + b] = self.get(i, j);
            }
        }
        m
    }

    /// `alpha * self + beta * other`; both coefficients must be non-negative.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if other.n != self.n {
            return Err(GraphError::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mu = self.mu.iter().zip(&other.mu).map(|(a, b)| alpha * a + beta * b).collect();
        let m = RequirementsMatrix { n: self.n, mu };
        m.validate()?;
        Ok(m)
    }

    /// Sum over unordered pairs `i < j`.
    pub fn pair_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 1..=self.n {
            for j in (i + 1)..=self.n {
                s += self.get(i, j);
            }
        }
        s
    }
}

impl TryFrom<Vec<Vec<f64>>> for RequirementsMatrix {
    type Error = GraphError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        RequirementsMatrix::from_rows(rows)
    }
}

impl From<RequirementsMatrix> for Vec<Vec<f64>> {
    fn from(m: RequirementsMatrix) -> Self {
        m.rows()
    }
}

/// Positive lengths on unordered vertex pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeLengths(BTreeMap<(usize, usize), f64>);

impl EdgeLengths {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize, t: f64) {
        self.0.insert(ordered_pair(i, j), t);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.0.get(&ordered_pair(i, j)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_unit(&self) -> bool {
        self.0.values().all(|&t| t == 1.0)
    }
}

impl FromIterator<((usize, usize), f64)> for EdgeLengths {
    fn from_iter<I: IntoIterator<Item = ((usize, usize), f64)>>(iter: I) -> Self {
        let mut l = EdgeLengths::new();
        for ((i, j), t) in iter {
            l.insert(i, j, t);
        }
        l
    }
}

/// Pairwise path lengths in a tree.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceMatrix {
    /// Hop counts (unit edge lengths).
    Hops { n: usize, data: Vec<u32> },
    /// Sums of real edge lengths.
    Weighted { n: usize, data: Vec<f64> },
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        match self {
            DistanceMatrix::Hops { n, .. } | DistanceMatrix::Weighted { n, .. } => *n,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            DistanceMatrix::Hops { n, data } => data[(i - 1) * n + (j - 1)] as f64,
            DistanceMatrix::Weighted { n, data } => data[(i - 1) * n + (j - 1)],
        }
    }

    /// Hop count, only for unit-length matrices.
    pub fn hops(&self, i: usize, j: usize) -> Option<u32> {
        match self {
            DistanceMatrix::Hops { n, data } => Some(data[(i - 1) * n + (j - 1)]),
            DistanceMatrix::Weighted { .. } => None,
        }
    }
}

/// Distances along the unique tree paths, by one BFS per source.
pub fn bfs_distance_matrix(tree: &LabeledTree, lengths: Option<&EdgeLengths>) -> Result<DistanceMatrix> {
    let n = tree.n();
    let adj = tree.adjacency();
    let unit = match lengths {
        None => true,
        Some(l) => {
            for &(a, b) in tree.edges() {
                match l.get(a, b) {
                    Some(t) if t > 0.0 && t.is_finite() => {}
                    _ => return Err(GraphError::BadLength(a, b)),
                }
            }
            tree.edges().iter().all(|&(a, b)| l.get(a, b) == Some(1.0))
        }
    };
    let mut hops = vec![u32::MAX; n * n];
    let mut real = vec![f64::NAN; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 1..=n {
        let row = (s - 1) * n;
        hops[row + s - 1] = 0;
        real[row + s - 1] = 0.0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u - 1] {
                if hops[row + v - 1] == u32::MAX {
                    hops[row + v - 1] = hops[row + u - 1] + 1;
                    let t = lengths.and_then(|l| l.get(u, v)).unwrap_or(1.0);
                    real[row + v - 1] = real[row + u - 1] + t;
                    queue.push_back(v);
                }
            }
        }
    }
    if hops.iter().any(|&h| h == u32::MAX) {
        return Err(GraphError::Disconnected);
    }
    Ok(if unit {
        DistanceMatrix::Hops { n, data: hops }
    } else {
        DistanceMatrix::Weighted { n, data: real }
    })
}

/// `sum over ordered pairs i != j of mu_ij * d_T(i, j)`.
pub fn communication_cost(
    tree: &LabeledTree,
    req: &RequirementsMatrix,
    lengths: Option<&EdgeLengths>,
) -> Result<f64> {
    if req.n() != tree.n() {
        return Err(GraphError::DimensionMismatch { expected: tree.n(), got: req.n() });
    }
    let dist = bfs_distance_matrix(tree, lengths)?;
    Ok(cost_from_distances(&dist, req))
}

pub(crate) fn cost_from_distances(dist: &DistanceMatrix, req: &RequirementsMatrix) -> f64 {
    let n = req.n();
    let mut total = 0.0;
    for i in 1..=n {
        for j in (i + 1)..=n {
            let mu = req.get(i, j);
            if mu != 0.0 {
                total += mu * dist.get(i, j);
            }
        }
    }
    2.0 * total
}

/// Sum of hop distances over unordered pairs.
pub fn wiener_index(tree: &LabeledTree) -> u64 {
    let dist = bfs_distance_matrix(tree, None).expect("valid tree");
    let n = tree.n();
    let mut w = 0u64;
    for i in 1..=n {
        for j in (i + 1)..=n {
            w += dist.get(i, j) as u64;
        }
    }
    w
}

pub fn degree_sequence_of(tree: &LabeledTree) -> DegreeSequence {
    DegreeSequence::new(tree.degrees()).expect("a tree always has an arborescent degree sequence")
}

/// A sequence of `n - 2` labels in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PruferCode {
    n: usize,
    code: Vec<usize>,
}

impl PruferCode {
    pub fn new(n: usize, code: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        if code.len() != n - 2 {
            return Err(GraphError::CodeLength { n, expected: n - 2, got: code.len() });
        }
        if let Some(&v) = code.iter().find(|&&v| v == 0 || v > n) {
            return Err(GraphError::VertexOutOfRange(v, n));
        }
        Ok(PruferCode { n, code })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.code
    }
}

/// Linear-time decoding of a Prüfer code.
pub fn prufer_decode(code: &PruferCode) -> LabeledTree {
    let n = code.n;
    let seq = &code.code;
    let mut degree = vec![1usize; n + 1];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 1;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &v in seq {
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 && v < ptr {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n));
    LabeledTree::new(n, edges).expect("Prüfer decoding always yields a tree")
}

/// Linear-time encoding; inverse of [`prufer_decode`].
pub fn prufer_encode(tree: &LabeledTree) -> PruferCode {
    let n = tree.n();
    let adj = tree.adjacency();
    // Parent pointers with vertex n as root.
    let mut parent = vec![0usize; n + 1];
    let mut stack = vec![n];
    let mut visited = vec![false; n + 1];
    visited[n] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u - 1] {
            if !visited[v] {
                visited[v] = true;
                parent[v] = u;
                stack.push(v);
            }
        }
    }
    let mut degree: Vec<usize> = std::iter::once(0).chain(adj.iter().map(Vec::len)).collect();
    let mut code = Vec::with_capacity(n.saturating_sub(2));
    let mut ptr = 1;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for _ in 0..n.saturating_sub(2) {
        let next = parent[leaf];
        code.push(next);
        degree[next] -= 1;
        if degree[next] == 1 && next < ptr {
            leaf = next;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    PruferCode { n, code }
}

/// Largest absolute residual of `sum_{k in N(i)} d_kj - d_i d_ij - (d_i - 2)`
/// over ordered pairs `i != j`. Zero exactly when the identity holds.
pub fn tree_identity_residual(tree: &LabeledTree, dist: &DistanceMatrix) -> f64 {
    let n = tree.n();
    let adj = tree.adjacency();
    let mut worst = 0.0f64;
    for i in 1..=n {
        let di = adj[i - 1].len();
        for j in 1..=n {
            if i == j {
                continue;
            }
            let r = match dist {
                DistanceMatrix::Hops { .. } => {
                    let s: i64 = adj[i - 1].iter().map(|&k| dist.hops(k, j).unwrap() as i64).sum();
                    (s - di as i64 * dist.hops(i, j).unwrap() as i64 - (di as i64 - 2)).abs() as f64
                }
                DistanceMatrix::Weighted { .. } => {
                    let s: f64 = adj[i - 1].iter().map(|&k| dist.get(k, j)).sum();
                    (s - di as f64 * dist.get(i, j) - (di as f64 - 2.0)).abs()
                }
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Checks `d_ij = 1` on edges and `d_ij = 1 + min_{k in N(i)} d_kj` elsewhere,
/// at every ordered pair. Returns the first failing pair.
pub fn bellman_violation(tree: &LabeledTree, dist: &DistanceMatrix) -> Option<(usize, usize)> {
    let n = tree.n();
    let adj = tree.adjacency();
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let expected = if tree.has_edge(i, j) {
                1.0
            } else {
                1.0 + adj[i - 1].iter().map(|&k| dist.get(k, j)).fold(f64::INFINITY, f64::min)
            };
            if dist.get(i, j) != expected {
                return Some((i, j));
            }
        }
    }
    None
}

/// A tree on an arbitrary set of labels, used for the internal vertices of a
/// full tree. A single vertex with no edges is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefoliatedTree {
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl DefoliatedTree {
    pub fn new(mut vertices: Vec<usize>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.is_empty() {
            return Err(GraphError::TooSmall(0));
        }
        let max = *vertices.last().unwrap();
        let pos = |v: usize| vertices.binary_search(&v).map_err(|_| GraphError::VertexOutOfRange(v, max));
        let mut local = Vec::new();
        for (a, b) in edges {
            local.push((pos(a)? + 1, pos(b)? + 1));
        }
        if vertices.len() == 1 {
            if !local.is_empty() {
                return Err(GraphError::EdgeCount { n: 1, expected: 0, got: local.len() });
            }
            return Ok(DefoliatedTree { vertices, edges: Vec::new() });
        }
        let t = LabeledTree::new(vertices.len(), local)?;
        let edges = t.edges().iter().map(|&(a, b)| (vertices[a - 1], vertices[b - 1])).collect();
        Ok(DefoliatedTree { vertices, edges })
    }

    /// The vertices of `tree` with degree above one and the edges among them.
    pub fn of_tree(tree: &LabeledTree) -> Self {
        let deg = tree.degrees();
        let vertices: Vec<usize> = (1..=tree.n()).filter(|&v| deg[v - 1] > 1).collect();
        let vertices = if vertices.is_empty() { vec![1] } else { vertices };
        let edges: Vec<(usize, usize)> = tree.internal_edges();
        DefoliatedTree::new(vertices, edges).expect("internal vertices of a tree span a subtree")
    }

    /// Sorted vertex labels.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Hop distances indexed by vertex positions.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        let m = self.vertices.len();
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in &self.edges {
            let (pa, pb) = (self.position(a).unwrap(), self.position(b).unwrap());
            adj[pa].push(pb);
            adj[pb].push(pa);
        }
        let mut out = vec![vec![usize::MAX; m]; m];
        for s in 0..m {
            out[s][s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if out[s][v] == usize::MAX {
                        out[s][v] = out[s][u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        out
    }
}
