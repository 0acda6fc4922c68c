mod common;

use ocst_core::exact::{brute_force_optimum, EnumerationBudget};
use ocst_core::graph::LabeledTree;
use ocst_core::heuristics::{initial_tree, local_search, local_search_traced, MoveKind, Move, NeighborhoodSpec, Strategy};
use ocst_core::instance::{generate_instance, Admissible, Instance};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{hop_cost, is_spanning_tree, suite_instance};

fn sparse_instance(n: usize, seed: u64) -> Instance {
    let base = generate_instance(n, 30, 0.6, None, seed).unwrap();
    // Keep a random tree with the right degrees plus random extra edges.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = initial_tree(&base, seed).unwrap();
    let mut edges: Vec<(usize, usize)> = start.edges().to_vec();
    for &e in base.edges() {
        if rng.gen_bool(0.4) {
            edges.push(e);
        }
    }
    Instance::new(base.requirements().clone(), base.degrees().clone(), Admissible::Edges(edges), None).unwrap()
}

/// Every tree one exchange or one label swap away, built from scratch.
fn neighbors(tree: &LabeledTree, inst: &Instance) -> Vec<LabeledTree> {
    let n = tree.n();
    let edges = tree.edges().to_vec();
    let mut out = Vec::new();
    for x in 0..edges.len() {
        for y in 0..edges.len() {
            if x == y {
                continue;
            }
            let (a, b) = edges[x];
            for (c, d) in [edges[y], (edges[y].1, edges[y].0)] {
                let mut next: Vec<(usize, usize)> =
                    edges.iter().enumerate().filter(|&(k, _)| k != x && k != y).map(|(_, &e)| e).collect();
                if a == d || c == b {
                    continue;
                }
                next.push((a, d));
                next.push((c, b));
                if is_spanning_tree(n, &next) && next.iter().all(|&(p, q)| inst.is_admissible_edge(p, q)) {
                    if let Ok(t) = LabeledTree::new(n, next) {
                        out.push(t);
                    }
                }
            }
        }
    }
    let deg = inst.degrees().as_slice();
    for i in 1..=n {
        for j in i + 1..=n {
            if deg[i - 1] != deg[j - 1] {
                continue;
            }
            let swap = |v: usize| if v == i { j } else if v == j { i } else { v };
            let next: Vec<(usize, usize)> = edges.iter().map(|&(p, q)| (swap(p), swap(q))).collect();
            if next.iter().all(|&(p, q)| inst.is_admissible_edge(p, q)) {
                out.push(LabeledTree::new(n, next).unwrap());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn initial_trees_are_admissible(n in 3usize..=15, seed in any::<u64>(), sparse in any::<bool>()) {
        let inst = if sparse { sparse_instance(n, seed) } else { generate_instance(n, 30, 0.6, None, seed).unwrap() };
        let t = initial_tree(&inst, seed).unwrap();
        prop_assert!(inst.is_admissible_tree(&t));
        prop_assert_eq!(t.degrees(), inst.degrees().as_slice().to_vec());
    }

    #[test]
    fn search_descends_to_a_local_optimum(n in 4usize..=9, seed in any::<u64>(), first in any::<bool>()) {
        let inst = sparse_instance(n, seed);
        let strategy = if first { Strategy::FirstImprovement } else { Strategy::BestImprovement };
        let spec = NeighborhoodSpec::new([MoveKind::TwoEdgeExchange, MoveKind::EqualDegreeLabelSwap], strategy).unwrap();
        let start = initial_tree(&inst, seed).unwrap();
        let out = local_search_traced(&start, &inst, &spec);
        prop_assert!(inst.is_admissible_tree(&out.tree));
        prop_assert_eq!(out.initial_cost, hop_cost(&start, inst.requirements()));
        prop_assert_eq!(out.cost, hop_cost(&out.tree, inst.requirements()));
        let mut prev = out.initial_cost;
        for s in &out.trace {
            prop_assert!(s.cost < prev);
            prev = s.cost;
        }
        prop_assert_eq!(prev, out.cost);
        for t in neighbors(&out.tree, &inst) {
            prop_assert!(hop_cost(&t, inst.requirements()) >= out.cost * (1.0 - 1e-9) - 1e-9);
        }
    }
}

#[test]
fn trace_replays_to_the_result() {
    let inst = suite_instance(9, 12);
    let start = initial_tree(&inst, 0).unwrap();
    let out = local_search_traced(&start, &inst, &NeighborhoodSpec::default());
    let mut t = start.clone();
    for s in &out.trace {
        t = match s.mv {
            Move::TwoEdgeExchange { a, b, c, d } => {
                let drop = [(a.min(b), a.max(b)), (c.min(d), c.max(d))];
                let edges = t.edges().iter().copied().filter(|e| !drop.contains(e)).chain([(a, d), (c, b)]);
                LabeledTree::new(t.n(), edges).unwrap()
            }
            Move::EqualDegreeLabelSwap { i, j } => {
                let mut perm: Vec<usize> = (1..=t.n()).collect();
                perm.swap(i - 1, j - 1);
                t.relabel(&perm).unwrap()
            }
        };
        assert_eq!(hop_cost(&t, inst.requirements()), s.cost);
        assert_eq!(t.degrees(), inst.degrees().as_slice().to_vec());
    }
    assert_eq!(t, out.tree);
}

#[test]
fn restricted_neighborhoods() {
    let inst = suite_instance(8, 4);
    let start = initial_tree(&inst, 0).unwrap();
    for kind in [MoveKind::TwoEdgeExchange, MoveKind::EqualDegreeLabelSwap] {
        let spec = NeighborhoodSpec::new([kind], Strategy::BestImprovement).unwrap();
        let out = local_search_traced(&start, &inst, &spec);
        for s in &out.trace {
            let matches = matches!((kind, s.mv), (MoveKind::TwoEdgeExchange, Move::TwoEdgeExchange { .. })
                | (MoveKind::EqualDegreeLabelSwap, Move::EqualDegreeLabelSwap { .. }));
            assert!(matches);
        }
    }
}

#[test]
fn never_below_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..15 {
        let inst = suite_instance(rng.gen_range(5..=8), 300 + seed);
        let opt = brute_force_optimum(&inst, EnumerationBudget::default()).unwrap().cost;
        let mut all: Vec<LabeledTree> =
            ocst_core::exact::enumerate_trees(inst.degrees(), EnumerationBudget::default()).unwrap().collect();
        all.shuffle(&mut rng);
        for start in all.iter().take(3) {
            let t = local_search(start, &inst, &NeighborhoodSpec::default());
            let c = inst.cost(&t);
            assert!(c >= opt);
            assert!(c <= inst.cost(start));
        }
    }
}
