//! Exhaustive oracles: trees with a fixed degree sequence through Prüfer
//! codes, trees over the internal vertices, and exact leaf placement.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::formulations::{build_f0q_qap, extract_tree, FormulationError, Tag};
use crate::graph::{
    bfs_distance_matrix, cost_from_distances, prufer_decode, DefoliatedTree, DegreeSequence, LabeledTree, PruferCode,
};
use crate::instance::Instance;
use crate::milp::{solve_mip, SolveParams, SolveStatus};
use crate::model::{linearize, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("{count} trees exceed the enumeration budget of {cap}")]
    BudgetExceeded { count: u128, cap: u128 },
    #[error("no admissible tree has the target degree sequence")]
    NoAdmissibleTree,
    #[error("need at least {0} vertices")]
    TooSmall(usize),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("leaf assignment solver stopped early: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, ExactError>;

/// Upper limit on the number of trees an enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_trees: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max_trees: 10_000_000 }
    }
}

impl EnumerationBudget {
    pub fn unlimited() -> Self {
        EnumerationBudget { max_trees: u128::MAX }
    }

    fn check(&self, count: u128) -> Result<()> {
        if count > self.max_trees {
            return Err(ExactError::BudgetExceeded { count, cap: self.max_trees });
        }
        Ok(())
    }
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i))
}

/// `(n - 2)! / prod (d_i - 1)!`, saturating at `u128::MAX`.
pub fn count_trees(degrees: &DegreeSequence) -> u128 {
    let n = degrees.n();
    if n < 2 {
        return 0;
    }
    let mut den = BigUint::from(1u32);
    for &d in degrees.as_slice() {
        den *= factorial(d - 1);
    }
    (factorial(n - 2) / den).to_u128().unwrap_or(u128::MAX)
}

/// Steps `v` to the next lexicographic permutation; false after the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn code_multiset(degrees: &DegreeSequence) -> Vec<usize> {
    let mut code = Vec::with_capacity(degrees.n().saturating_sub(2));
    for v in 1..=degrees.n() {
        for _ in 1..degrees.degree(v) {
            code.push(v);
        }
    }
    code
}

/// Trees with the given degrees, in lexicographic order of their Prüfer codes.
#[derive(Debug, Clone)]
pub struct TreeEnumerator {
    n: usize,
    code: Vec<usize>,
    started: bool,
    done: bool,
}

impl TreeEnumerator {
    /// The Prüfer code of the tree the next call to `next` returns.
    pub fn peek_code(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.code.as_slice())
    }

    fn advance(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.started {
            if !next_permutation(&mut self.code) {
                self.done = true;
                return None;
            }
        } else {
            self.started = true;
        }
        Some(self.code.clone())
    }

    /// Yields codes without decoding them.
    pub fn next_code(&mut self) -> Option<Vec<usize>> {
        self.advance()
    }
}

impl Iterator for TreeEnumerator {
    type Item = LabeledTree;

    fn next(&mut self) -> Option<LabeledTree> {
        let code = self.advance()?;
        Some(prufer_decode(&PruferCode::new(self.n, code).expect("valid code")))
    }
}

pub fn enumerate_trees(degrees: &DegreeSequence, budget: EnumerationBudget) -> Result<TreeEnumerator> {
    if degrees.n() < 2 {
        return Err(ExactError::TooSmall(2));
    }
    budget.check(count_trees(degrees))?;
    Ok(TreeEnumerator { n: degrees.n(), code: code_multiset(degrees), started: false, done: false })
}

/// Result of an oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub tree: LabeledTree,
    pub cost: f64,
    pub trees_examined: u64,
    pub elapsed: f64,
}

/// Minimum cost over all admissible trees; ties go to the smallest code.
pub fn brute_force_optimum(instance: &Instance, budget: EnumerationBudget) -> Result<OracleResult> {
    let start = Instant::now();
    let n = instance.n();
    let mut it = enumerate_trees(instance.degrees(), budget)?;
    let mut best: Option<(f64, LabeledTree)> = None;
    let mut examined = 0u64;
    while let Some(code) = it.next_code() {
        examined += 1;
        let tree = prufer_decode(&PruferCode::new(n, code).expect("valid code"));
        if !tree.edges().iter().all(|&(a, b)| instance.is_admissible_edge(a, b)) {
            continue;
        }
        let dist = bfs_distance_matrix(&tree, instance.lengths()).expect("admissible edges carry lengths");
        let cost = cost_from_distances(&dist, instance.requirements());
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, tree));
        }
    }
    let (cost, tree) = best.ok_or(ExactError::NoAdmissibleTree)?;
    Ok(OracleResult { tree, cost, trees_examined: examined, elapsed: start.elapsed().as_secs_f64() })
}

/// Number of codes of length `len` over labels with multiplicity caps.
fn count_capped_sequences(caps: &[usize], len: usize) -> u128 {
    let mut binom = vec![vec![0u128; len + 1]; len + 1];
    for a in 0..=len {
        binom[a][0] = 1;
        for b in 1..=a {
            binom[a][b] = binom[a - 1][b - 1].saturating_add(binom[a - 1][b]);
        }
    }
    let mut dp = vec![0u128; len + 1];
    dp[0] = 1;
    for &cap in caps {
        let mut next = vec![0u128; len + 1];
        for j in 0..=len {
            for c in 0..=cap.min(j) {
                next[j] = next[j].saturating_add(dp[j - c].saturating_mul(binom[j][c]));
            }
        }
        dp = next;
    }
    dp[len]
}

/// Number of trees over the internal vertices whose degrees stay within the
/// targets.
pub fn count_defoliated_trees(degrees: &DegreeSequence) -> u128 {
    let internal = degrees.internal();
    let m = internal.len();
    if m <= 2 {
        return 1;
    }
    let caps: Vec<usize> = internal.iter().map(|&k| degrees.degree(k) - 1).collect();
    count_capped_sequences(&caps, m - 2)
}

/// Calls `f` on every tree over the internal vertices with `d_T(k) <= d_k`,
/// in lexicographic order of the codes over internal positions.
pub fn for_each_defoliated_tree(
    degrees: &DegreeSequence,
    budget: EnumerationBudget,
    mut f: impl FnMut(DefoliatedTree),
) -> Result<u64> {
    let internal = degrees.internal();
    let m = internal.len();
    if m == 0 {
        return Err(ExactError::TooSmall(3));
    }
    budget.check(count_defoliated_trees(degrees))?;
    if m == 1 {
        f(DefoliatedTree::new(internal, []).expect("single vertex"));
        return Ok(1);
    }
    if m == 2 {
        f(DefoliatedTree::new(internal.clone(), [(internal[0], internal[1])]).expect("single edge"));
        return Ok(1);
    }
    let caps: Vec<usize> = internal.iter().map(|&k| degrees.degree(k) - 1).collect();
    let mut used = vec![0usize; m];
    let mut code = vec![0usize; m - 2];
    let mut count = 0u64;

    fn rec(
        pos: usize,
        code: &mut [usize],
        used: &mut [usize],
        caps: &[usize],
        internal: &[usize],
        count: &mut u64,
        f: &mut dyn FnMut(DefoliatedTree),
    ) {
        if pos == code.len() {
            let m = internal.len();
            let local = prufer_decode(&PruferCode::new(m, code.to_vec()).expect("valid code"));
            let edges = local.edges().iter().map(|&(a, b)| (internal[a - 1], internal[b - 1]));
            f(DefoliatedTree::new(internal.to_vec(), edges).expect("decoded tree"));
            *count += 1;
            return;
        }
        for k in 0..internal.len() {
            if used[k] < caps[k] {
                used[k] += 1;
                code[pos] = k + 1;
                rec(pos + 1, code, used, caps, internal, count, f);
                used[k] -= 1;
            }
        }
    }
    rec(0, &mut code, &mut used, &caps, &internal, &mut count, &mut f);
    Ok(count)
}

pub fn enumerate_defoliated_trees(degrees: &DegreeSequence, budget: EnumerationBudget) -> Result<Vec<DefoliatedTree>> {
    let mut out = Vec::new();
    for_each_defoliated_tree(degrees, budget, |t| out.push(t))?;
    Ok(out)
}

/// How leaves are placed into the free slots of each internal tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafSolver {
    /// Exhaustive search up to 12 leaves, the MILP solver above that.
    #[default]
    Auto,
    Exhaustive,
    MiniMilp,
}

struct LeafProblem<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    internal: Vec<usize>,
    slots: Vec<usize>,
    /// `lin[p][k]`: cost of leaf `order[p]` at internal position `k`.
    lin: Vec<Vec<f64>>,
    dist: Vec<Vec<usize>>,
    /// Lower bound on the cost still to come once `p` leaves are placed.
    tail: Vec<f64>,
}

impl<'a> LeafProblem<'a> {
    fn new(inst: &'a Instance, tree: &DefoliatedTree) -> Self {
        let degs = inst.degrees();
        let req = inst.requirements();
        let internal = tree.vertices().to_vec();
        let dist = tree.distances();
        let slots: Vec<usize> = internal.iter().map(|&k| degs.degree(k) - tree.degree(k)).collect();
        let mut order = degs.leaves();
        let weight = |i: usize| -> f64 { (1..=inst.n()).map(|j| req.get(i, j)).sum() };
        order.sort_by(|&a, &b| weight(b).partial_cmp(&weight(a)).unwrap().then(a.cmp(&b)));
        let lin: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| {
                (0..internal.len())
                    .map(|k| {
                        if slots[k] == 0 || !inst.is_admissible_edge(i, internal[k]) {
                            return f64::INFINITY;
                        }
                        internal
                            .iter()
                            .enumerate()
                            .map(|(q, &v)| 2.0 * req.get(i, v) * (dist[k][q] + 1) as f64)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let n1 = order.len();
        let mut tail = vec![0.0; n1 + 1];
        for p in (0..n1).rev() {
            let min_lin = lin[p].iter().copied().fold(f64::INFINITY, f64::min);
            let pairs: f64 = (0..p).map(|q| 4.0 * req.get(order[p], order[q])).sum();
            tail[p] = tail[p + 1] + min_lin + pairs;
        }
        LeafProblem { inst, order, internal, slots, lin, dist, tail }
    }

    fn constant(&self) -> f64 {
        let req = self.inst.requirements();
        let mut c = 0.0;
        for p in 0..self.internal.len() {
            for q in (p + 1)..self.internal.len() {
                c += 2.0 * req.get(self.internal[p], self.internal[q]) * self.dist[p][q] as f64;
            }
        }
        c
    }

    /// Best placement with cost below `cutoff`, as host positions per leaf.
    fn solve(&self, cutoff: f64) -> Option<(f64, Vec<usize>)> {
        let base = self.constant();
        if base + self.tail[0] >= cutoff {
            return None;
        }
        let mut state = Search {
            hosts: vec![usize::MAX; self.order.len()],
            slots: self.slots.clone(),
            best: cutoff - base,
            best_hosts: None,
        };
        self.dfs(0, 0.0, &mut state);
        state.best_hosts.map(|h| (state.best + base, h))
    }

    fn dfs(&self, p: usize, partial: f64, st: &mut Search) {
        if p == self.order.len() {
            if partial < st.best {
                st.best = partial;
                st.best_hosts = Some(st.hosts.clone());
            }
            return;
        }
        let req = self.inst.requirements();
        let i = self.order[p];
        for k in 0..self.internal.len() {
            if st.slots[k] == 0 || self.lin[p][k].is_infinite() {
                continue;
            }
            let mut delta = self.lin[p][k];
            for q in 0..p {
                let mu = req.get(i, self.order[q]);
                if mu != 0.0 {
                    delta += 2.0 * mu * (self.dist[k][st.hosts[q]] + 2) as f64;
                }
            }
            let value = partial + delta;
            if value + self.tail[p + 1] >= st.best {
                continue;
            }
            st.slots[k] -= 1;
            st.hosts[p] = k;
            self.dfs(p + 1, value, st);
            st.slots[k] += 1;
        }
        st.hosts[p] = usize::MAX;
    }

    fn tree(&self, tree: &DefoliatedTree, hosts: &[usize]) -> LabeledTree {
        let mut edges = tree.edges().to_vec();
        for (p, &k) in hosts.iter().enumerate() {
            edges.push((self.order[p], self.internal[k]));
        }
        LabeledTree::new(self.inst.n(), edges).expect("leaf placement completes a tree")
    }
}

struct Search {
    hosts: Vec<usize>,
    slots: Vec<usize>,
    best: f64,
    best_hosts: Option<Vec<usize>>,
}

fn all_admissible(instance: &Instance, tree: &DefoliatedTree) -> bool {
    tree.edges().iter().all(|&(a, b)| instance.is_admissible_edge(a, b))
}

/// Minimum over trees on the internal vertices of the best leaf placement.
/// The running record cuts off each subsequent placement problem.
pub fn f0q_optimum(instance: &Instance, leaf_solver: LeafSolver, budget: EnumerationBudget) -> Result<OracleResult> {
    let start = Instant::now();
    if instance.n() < 3 {
        return Err(ExactError::TooSmall(3));
    }
    let n1 = instance.degrees().n_leaves();
    let solver = match leaf_solver {
        LeafSolver::Auto if n1 <= 12 => LeafSolver::Exhaustive,
        LeafSolver::Auto => LeafSolver::MiniMilp,
        s => s,
    };
    let mut best: Option<(f64, LabeledTree)> = None;
    let mut failure: Option<ExactError> = None;
    let examined = for_each_defoliated_tree(instance.degrees(), budget, |tree| {
        if failure.is_some() || !all_admissible(instance, &tree) {
            return;
        }
        let cutoff = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        match solver {
            LeafSolver::Exhaustive | LeafSolver::Auto => {
                let problem = LeafProblem::new(instance, &tree);
                if let Some((cost, hosts)) = problem.solve(cutoff) {
                    best = Some((cost, problem.tree(&tree, &hosts)));
                }
            }
            LeafSolver::MiniMilp => match solve_leaf_milp(instance, &tree, cutoff) {
                Ok(Some(found)) => best = Some(found),
                Ok(None) => {}
                Err(e) => failure = Some(e),
            },
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, tree) = best.ok_or(ExactError::NoAdmissibleTree)?;
    let cost = instance.cost(&tree);
    Ok(OracleResult { tree, cost, trees_examined: examined, elapsed: start.elapsed().as_secs_f64() })
}

fn solve_leaf_milp(instance: &Instance, tree: &DefoliatedTree, cutoff: f64) -> Result<Option<(f64, LabeledTree)>> {
    let model = linearize(&build_f0q_qap(tree, instance)?)?;
    let params = SolveParams { cutoff: cutoff.is_finite().then_some(cutoff), ..SolveParams::default() };
    let res = solve_mip(&model, &params)?;
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(None),
        other => return Err(ExactError::Solver(format!("{other:?}"))),
    }
    let Some(rec) = res.record else { return Ok(None) };
    let t = extract_tree(&rec.assignment, instance, &Tag::F0Q.into())?;
    let cost = instance.cost(&t);
    Ok((cost < cutoff).then_some((cost, t)))
}
