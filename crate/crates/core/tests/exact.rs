mod common;

use std::collections::BTreeSet;

use ocst_core::exact::{
    brute_force_optimum, count_defoliated_trees, count_trees, enumerate_defoliated_trees, enumerate_trees, f0q_optimum,
    EnumerationBudget, LeafSolver,
};
use ocst_core::graph::{prufer_encode, DegreeSequence, LabeledTree, RequirementsMatrix};
use ocst_core::instance::{bisection_reduction, product_requirements, random_arborescent_degree_sequence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{complete, hop_cost, integer_requirements, is_spanning_tree, multinomial_count, suite_instance, trees_by_subsets};

/// Internal-vertex trees by scanning edge subsets of the complete graph on
/// the internal labels.
fn defoliated_by_subsets(d: &DegreeSequence) -> usize {
    let internal = d.internal();
    let m = internal.len();
    if m <= 2 {
        return 1;
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let mut count = 0;
    for mask in 0u32..(1 << pairs.len()) {
        if mask.count_ones() as usize != m - 1 {
            continue;
        }
        let chosen: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &(a, b))| (a + 1, b + 1)).collect();
        let mut deg = vec![0; m];
        for &(a, b) in &chosen {
            deg[a - 1] += 1;
            deg[b - 1] += 1;
        }
        if is_spanning_tree(m, &chosen) && (0..m).all(|k| deg[k] <= d.degree(internal[k])) {
            count += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn count_matches_multinomial(n in 3usize..=16, seed in any::<u64>()) {
        let d = random_arborescent_degree_sequence(n, None, seed).unwrap();
        prop_assert_eq!(count_trees(&d), multinomial_count(d.as_slice()));
    }

    #[test]
    fn enumeration_is_distinct_and_degree_exact(n in 3usize..=9, seed in any::<u64>()) {
        let d = random_arborescent_degree_sequence(n, None, seed).unwrap();
        let mut codes = BTreeSet::new();
        let mut last: Option<Vec<usize>> = None;
        for t in enumerate_trees(&d, EnumerationBudget::default()).unwrap() {
            prop_assert_eq!(t.degrees(), d.as_slice().to_vec());
            let code = prufer_encode(&t).as_slice().to_vec();
            if let Some(prev) = &last {
                prop_assert!(prev < &code);
            }
            last = Some(code.clone());
            codes.insert(code);
        }
        prop_assert_eq!(codes.len() as u128, count_trees(&d));
    }

    #[test]
    fn defoliated_count_matches_subsets(n in 3usize..=12, seed in any::<u64>()) {
        let d = random_arborescent_degree_sequence(n, None, seed).unwrap();
        prop_assume!(d.n_internal() <= 6);
        let listed = enumerate_defoliated_trees(&d, EnumerationBudget::default()).unwrap();
        let expected = defoliated_by_subsets(&d);
        prop_assert_eq!(listed.len(), expected);
        prop_assert_eq!(count_defoliated_trees(&d), expected as u128);
        let distinct: BTreeSet<Vec<(usize, usize)>> = listed.iter().map(|t| t.edges().to_vec()).collect();
        prop_assert_eq!(distinct.len(), expected);
    }
}

#[test]
fn enumeration_against_edge_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..20 {
        let n = rng.gen_range(4..=7);
        let d = random_arborescent_degree_sequence(n, None, seed).unwrap();
        let inst = complete(RequirementsMatrix::zeros(n), d.as_slice().to_vec());
        let by_subsets: BTreeSet<LabeledTree> = trees_by_subsets(&inst).into_iter().collect();
        let enumerated: BTreeSet<LabeledTree> = enumerate_trees(&d, EnumerationBudget::default()).unwrap().collect();
        assert_eq!(enumerated, by_subsets, "{:?}", d.as_slice());
    }
}

#[test]
fn small_counts() {
    let d = DegreeSequence::new(vec![4, 2, 1, 1, 1, 1]).unwrap();
    assert_eq!(count_trees(&d), 4);
    assert_eq!(enumerate_trees(&d, EnumerationBudget::default()).unwrap().count(), 4);

    let paths: Vec<LabeledTree> =
        enumerate_trees(&DegreeSequence::new(vec![1, 1, 2, 2]).unwrap(), EnumerationBudget::default()).unwrap().collect();
    let expected: BTreeSet<LabeledTree> = [
        LabeledTree::new(4, [(1, 3), (3, 4), (4, 2)]).unwrap(),
        LabeledTree::new(4, [(1, 4), (4, 3), (3, 2)]).unwrap(),
    ]
    .into_iter()
    .collect();
    assert_eq!(paths.into_iter().collect::<BTreeSet<_>>(), expected);

    let three = enumerate_defoliated_trees(&DegreeSequence::new(vec![1, 1, 2, 2, 2]).unwrap(), EnumerationBudget::default()).unwrap();
    assert_eq!(three.len(), 3);
}

#[test]
fn brute_force_matches_subset_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..25 {
        let n = rng.gen_range(4..=7);
        let d = random_arborescent_degree_sequence(n, None, seed).unwrap();
        let req = integer_requirements(n, &mut rng);
        let inst = complete(req.clone(), d.as_slice().to_vec());
        let best = trees_by_subsets(&inst).iter().map(|t| hop_cost(t, &req)).fold(f64::INFINITY, f64::min);
        let r = brute_force_optimum(&inst, EnumerationBudget::default()).unwrap();
        assert_eq!(r.cost, best);
        assert_eq!(hop_cost(&r.tree, &req), best);
        assert_eq!(r.trees_examined as u128, count_trees(&d));
    }
}

#[test]
fn product_weights_on_two_paths() {
    let req = product_requirements(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let inst = complete(req.clone(), vec![1, 1, 2, 2]);
    let a = LabeledTree::new(4, [(1, 3), (3, 4), (4, 2)]).unwrap();
    let b = LabeledTree::new(4, [(1, 4), (4, 3), (3, 2)]).unwrap();
    let best = hop_cost(&a, &req).min(hop_cost(&b, &req));
    assert_eq!(brute_force_optimum(&inst, EnumerationBudget::default()).unwrap().cost, best);
}

#[test]
fn bisection_oracles() {
    let unit: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    let b = bisection_reduction(&unit).unwrap();
    assert_eq!(brute_force_optimum(b.instance(), EnumerationBudget::default()).unwrap().cost, 32.0);
    assert_eq!(f0q_optimum(b.instance(), LeafSolver::Exhaustive, EnumerationBudget::default()).unwrap().cost, 32.0);
}

#[test]
fn f0q_matches_brute_force() {
    for seed in 0..12 {
        let inst = suite_instance(5 + (seed as usize % 4), 100 + seed);
        let bf = brute_force_optimum(&inst, EnumerationBudget::default()).unwrap();
        for solver in [LeafSolver::Exhaustive, LeafSolver::MiniMilp] {
            let r = f0q_optimum(&inst, solver, EnumerationBudget::default()).unwrap();
            assert_eq!(r.cost, bf.cost, "seed {seed} {solver:?}");
            assert!(inst.is_admissible_tree(&r.tree));
            assert_eq!(hop_cost(&r.tree, inst.requirements()), r.cost);
        }
    }
}

#[test]
fn single_hub_is_one_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let req = integer_requirements(6, &mut rng);
    let inst = complete(req.clone(), vec![1, 1, 1, 1, 1, 5]);
    let r = f0q_optimum(&inst, LeafSolver::Auto, EnumerationBudget::default()).unwrap();
    let star = LabeledTree::new(6, (1..=5).map(|v| (v, 6))).unwrap();
    assert_eq!(r.tree, star);
    assert_eq!(r.cost, hop_cost(&star, &req));
}

#[test]
fn zero_requirements_cost_nothing() {
    let inst = complete(RequirementsMatrix::zeros(7), vec![1, 1, 1, 1, 2, 3, 3]);
    assert_eq!(brute_force_optimum(&inst, EnumerationBudget::default()).unwrap().cost, 0.0);
    assert_eq!(f0q_optimum(&inst, LeafSolver::Auto, EnumerationBudget::default()).unwrap().cost, 0.0);
}

#[test]
fn budget_is_enforced() {
    let d = DegreeSequence::new(vec![1, 1, 1, 1, 2, 2, 3, 3]).unwrap();
    assert!(enumerate_trees(&d, EnumerationBudget { max_trees: count_trees(&d) - 1 }).is_err());
    assert!(enumerate_trees(&d, EnumerationBudget { max_trees: count_trees(&d) }).is_ok());
}
