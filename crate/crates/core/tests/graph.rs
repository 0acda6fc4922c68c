mod common;

use ocst_core::graph::{
    bellman_violation, bfs_distance_matrix, communication_cost, degree_sequence_of, prufer_decode, prufer_encode,
    tree_identity_residual, wiener_index, DefoliatedTree, EdgeLengths, LabeledTree, PruferCode,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{floyd_warshall, hop_cost, integer_requirements, random_tree};

/// Wiener index from edge cuts: each edge separates `s` and `n - s` vertices.
fn wiener_by_edges(tree: &LabeledTree) -> u64 {
    let n = tree.n();
    let adj = tree.adjacency();
    let mut total = 0u64;
    for &(a, b) in tree.edges() {
        let mut seen = vec![false; n + 1];
        seen[a] = true;
        seen[b] = true;
        let mut stack = vec![b];
        let mut size = 1u64;
        while let Some(u) = stack.pop() {
            for &v in &adj[u - 1] {
                if !seen[v] {
                    seen[v] = true;
                    size += 1;
                    stack.push(v);
                }
            }
        }
        total += size * (n as u64 - size);
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distances_match_floyd_warshall(n in 2usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let d = bfs_distance_matrix(&t, None).unwrap();
        let fw = floyd_warshall(n, t.edges(), |_, _| 1.0);
        for i in 1..=n {
            for j in 1..=n {
                prop_assert_eq!(d.get(i, j), fw[i - 1][j - 1]);
            }
        }
    }

    #[test]
    fn weighted_distances_match_floyd_warshall(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let mut l = EdgeLengths::new();
        for &(a, b) in t.edges() {
            l.insert(a, b, rng.gen_range(1..=9) as f64);
        }
        let d = bfs_distance_matrix(&t, Some(&l)).unwrap();
        let fw = floyd_warshall(n, t.edges(), |a, b| l.get(a, b).unwrap());
        for i in 1..=n {
            for j in 1..=n {
                prop_assert_eq!(d.get(i, j), fw[i - 1][j - 1]);
            }
        }
    }

    #[test]
    fn cost_matches_pairwise_sum(n in 2usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let req = integer_requirements(n, &mut rng);
        prop_assert_eq!(communication_cost(&t, &req, None).unwrap(), hop_cost(&t, &req));
    }

    #[test]
    fn wiener_matches_edge_cuts(n in 2usize..=14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        prop_assert_eq!(wiener_index(&t), wiener_by_edges(&t));
    }

    #[test]
    fn prufer_round_trip(n in 2usize..=14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let code = prufer_encode(&t);
        prop_assert_eq!(code.as_slice().len(), n - 2);
        prop_assert_eq!(prufer_decode(&code), t.clone());
        for (v, d) in t.degrees().into_iter().enumerate() {
            let occurrences = code.as_slice().iter().filter(|&&c| c == v + 1).count();
            prop_assert_eq!(occurrences + 1, d);
        }
    }

    #[test]
    fn decode_then_encode(code in (3usize..=12).prop_flat_map(|n| proptest::collection::vec(1..=n, n - 2).prop_map(move |c| (n, c)))) {
        let (n, c) = code;
        let p = PruferCode::new(n, c.clone()).unwrap();
        let t = prufer_decode(&p);
        prop_assert_eq!(t.edges().len(), n - 1);
        prop_assert_eq!(prufer_encode(&t).as_slice().to_vec(), c);
    }

    #[test]
    fn identity_and_bellman_hold(n in 3usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let d = bfs_distance_matrix(&t, None).unwrap();
        prop_assert_eq!(tree_identity_residual(&t, &d), 0.0);
        prop_assert_eq!(bellman_violation(&t, &d), None);
    }

    #[test]
    fn relabeling_permutes_cost(n in 3usize..=10, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let mut perm: Vec<usize> = (1..=n).collect();
        perm.shuffle(&mut rng);
        let r = t.relabel(&perm).unwrap();
        prop_assert_eq!(wiener_index(&r), wiener_index(&t));
        let mut sorted_a = t.degrees();
        let mut sorted_b = r.degrees();
        sorted_a.sort_unstable();
        sorted_b.sort_unstable();
        prop_assert_eq!(sorted_a, sorted_b);
        prop_assert_eq!(LabeledTree::from_text(&t.to_text()).unwrap(), t);
    }
}

#[test]
fn bellman_detects_perturbed_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = random_tree(8, &mut rng);
    let d = bfs_distance_matrix(&t, None).unwrap();
    let other = LabeledTree::new(8, (1..8).map(|k| (k, k + 1))).unwrap();
    assert_ne!(t, other);
    let d_other = bfs_distance_matrix(&other, None).unwrap();
    assert!(bellman_violation(&t, &d_other).is_some());
    assert_eq!(bellman_violation(&t, &d), None);
}

#[test]
fn degree_sequence_and_defoliation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(3..=12);
        let t = random_tree(n, &mut rng);
        let ds = degree_sequence_of(&t);
        assert_eq!(ds.as_slice().iter().sum::<usize>(), 2 * (n - 1));
        let core = DefoliatedTree::of_tree(&t);
        let internal: Vec<usize> = (1..=n).filter(|&v| t.degrees()[v - 1] > 1).collect();
        assert_eq!(core.vertices(), &internal[..]);
        assert_eq!(core.edges().len() + 1, internal.len().max(1));
        for &v in &internal {
            let inner = t.adjacency()[v - 1].iter().filter(|&&u| t.degrees()[u - 1] > 1).count();
            assert_eq!(core.degree(v), inner);
        }
    }
}
