//! Degree-exact starting trees and degree-preserving local search.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ordered_pair, LabeledTree};
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeuristicError {
    #[error("no admissible tree found after {0} attempts")]
    NoAdmissibleTree(usize),
    #[error("neighborhood has no move kinds enabled")]
    EmptyNeighborhood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveKind {
    TwoEdgeExchange,
    EqualDegreeLabelSwap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    BestImprovement,
    FirstImprovement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    moves: Vec<MoveKind>,
    strategy: Strategy,
}

impl NeighborhoodSpec {
    pub fn new(moves: impl IntoIterator<Item = MoveKind>, strategy: Strategy) -> Result<Self, HeuristicError> {
        let mut moves: Vec<MoveKind> = moves.into_iter().collect();
        moves.sort_unstable();
        moves.dedup();
        if moves.is_empty() {
            return Err(HeuristicError::EmptyNeighborhood);
        }
        Ok(NeighborhoodSpec { moves, strategy })
    }

    pub fn moves(&self) -> &[MoveKind] {
        &self.moves
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn allows(&self, kind: MoveKind) -> bool {
        self.moves.contains(&kind)
    }
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        NeighborhoodSpec {
            moves: vec![MoveKind::TwoEdgeExchange, MoveKind::EqualDegreeLabelSwap],
            strategy: Strategy::BestImprovement,
        }
    }
}

/// An applied move, in 1-based labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Move {
    /// Removes `{a, b}` and `{c, d}`, inserts `{a, d}` and `{c, b}`.
    TwoEdgeExchange { a: usize, b: usize, c: usize, d: usize },
    EqualDegreeLabelSwap { i: usize, j: usize },
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Move::TwoEdgeExchange { a, b, c, d } => write!(f, "exchange -{{{a},{b}}} -{{{c},{d}}} +{{{a},{d}}} +{{{c},{b}}}"),
            Move::EqualDegreeLabelSwap { i, j } => write!(f, "swap {i}<->{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    #[serde(rename = "move")]
    pub mv: Move,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub tree: LabeledTree,
    pub initial_cost: f64,
    pub cost: f64,
    pub trace: Vec<TraceStep>,
}

const RETRIES: usize = 1000;

/// Attaches internal vertices, then leaves, each to a placed vertex with a
/// free stub. Picks the highest requirement partner unless randomized.
fn stub_greedy(instance: &Instance, rng: Option<&mut ChaCha8Rng>) -> Option<LabeledTree> {
    let n = instance.n();
    let deg = instance.degrees().as_slice();
    let req = instance.requirements();
    if n == 2 {
        return instance.is_admissible_edge(1, 2).then(|| LabeledTree::new(2, [(1, 2)]).expect("single edge"));
    }
    let mut internal = instance.degrees().internal();
    let mut leaves = instance.degrees().leaves();
    let total = |v: usize| (1..=n).map(|u| req.get(v, u)).sum::<f64>();
    internal.sort_by(|&a, &b| deg[b - 1].cmp(&deg[a - 1]).then(a.cmp(&b)));
    leaves.sort_by(|&a, &b| total(b).total_cmp(&total(a)).then(a.cmp(&b)));
    let mut rng = rng;
    if let Some(r) = rng.as_deref_mut() {
        internal.shuffle(r);
        leaves.shuffle(r);
    }
    let mut free: Vec<usize> = deg.to_vec();
    let mut placed: Vec<usize> = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n - 1);
    let mut attach = |v: usize, placed: &mut Vec<usize>, free: &mut Vec<usize>, rng: &mut Option<&mut ChaCha8Rng>| {
        let options: Vec<usize> =
            placed.iter().copied().filter(|&u| free[u - 1] > 0 && instance.is_admissible_edge(u, v)).collect();
        let u = match rng {
            Some(r) if !options.is_empty() => options[r.gen_range(0..options.len())],
            _ => *options.iter().max_by(|&&x, &&y| req.get(v, x).total_cmp(&req.get(v, y)).then(y.cmp(&x)))?,
        };
        free[u - 1] -= 1;
        free[v - 1] -= 1;
        placed.push(v);
        edges.push((u, v));
        Some(())
    };
    let (&root, rest) = internal.split_first()?;
    placed.push(root);
    for &v in rest {
        attach(v, &mut placed, &mut free, &mut rng)?;
    }
    for &v in &leaves {
        attach(v, &mut placed, &mut free, &mut rng)?;
    }
    LabeledTree::new(n, edges).ok().filter(|t| instance.is_admissible_tree(t))
}

/// Greedy stub filling, then seeded randomized retries when the admissible
/// edge set blocks the greedy choice.
pub fn initial_tree(instance: &Instance, seed: u64) -> Result<LabeledTree, HeuristicError> {
    if let Some(t) = stub_greedy(instance, None) {
        return Ok(t);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RETRIES {
        if let Some(t) = stub_greedy(instance, Some(&mut rng)) {
            return Ok(t);
        }
    }
    Err(HeuristicError::NoAdmissibleTree(RETRIES + 1))
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate < current - 1e-9 * (1.0 + current.abs())
}

fn apply(tree: &LabeledTree, mv: Move) -> Option<LabeledTree> {
    match mv {
        Move::TwoEdgeExchange { a, b, c, d } => {
            let (e1, e2) = (ordered_pair(a, b), ordered_pair(c, d));
            let edges = tree
                .edges()
                .iter()
                .copied()
                .filter(|&e| e != e1 && e != e2)
                .chain([(a, d), (c, b)]);
            LabeledTree::new(tree.n(), edges).ok()
        }
        Move::EqualDegreeLabelSwap { i, j } => {
            let mut perm: Vec<usize> = (1..=tree.n()).collect();
            perm.swap(i - 1, j - 1);
            tree.relabel(&perm).ok()
        }
    }
}

fn candidates(tree: &LabeledTree, instance: &Instance, spec: &NeighborhoodSpec) -> Vec<Move> {
    let mut out = Vec::new();
    if spec.allows(MoveKind::TwoEdgeExchange) {
        let edges = tree.edges();
        for (x, &(a, b)) in edges.iter().enumerate() {
            for &(p, q) in &edges[x + 1..] {
                for (c, d) in [(p, q), (q, p)] {
                    if a == d || c == b || tree.has_edge(a, d) || tree.has_edge(c, b) {
                        continue;
                    }
                    if instance.is_admissible_edge(a, d) && instance.is_admissible_edge(c, b) {
                        out.push(Move::TwoEdgeExchange { a, b, c, d });
                    }
                }
            }
        }
    }
    if spec.allows(MoveKind::EqualDegreeLabelSwap) {
        let deg = instance.degrees().as_slice();
        let n = instance.n();
        for i in 1..=n {
            for j in i + 1..=n {
                if deg[i - 1] == deg[j - 1] {
                    out.push(Move::EqualDegreeLabelSwap { i, j });
                }
            }
        }
    }
    out
}

/// Descends until no enabled move improves the cost, recording every
/// accepted step. Inadmissible input is returned unchanged.
pub fn local_search_traced(tree: &LabeledTree, instance: &Instance, spec: &NeighborhoodSpec) -> SearchOutcome {
    let mut current = tree.clone();
    let mut cost = instance.cost(&current);
    let initial_cost = cost;
    let mut trace = Vec::new();
    if !instance.is_admissible_tree(tree) {
        return SearchOutcome { tree: current, initial_cost, cost, trace };
    }
    loop {
        let mut best: Option<(Move, LabeledTree, f64)> = None;
        for mv in candidates(&current, instance, spec) {
            let Some(next) = apply(&current, mv) else { continue };
            if !instance.is_admissible_tree(&next) {
                continue;
            }
            let c = instance.cost(&next);
            let bar = best.as_ref().map_or(cost, |b| b.2);
            if improves(c, bar) {
                best = Some((mv, next, c));
                if spec.strategy == Strategy::FirstImprovement {
                    break;
                }
            }
        }
        let Some((mv, next, c)) = best else { break };
        current = next;
        cost = c;
        trace.push(TraceStep { step: trace.len() + 1, mv, cost });
    }
    SearchOutcome { tree: current, initial_cost, cost, trace }
}

pub fn local_search(tree: &LabeledTree, instance: &Instance, spec: &NeighborhoodSpec) -> LabeledTree {
    local_search_traced(tree, instance, spec).tree
}
