#![allow(dead_code)]

use ocst_core::graph::{DegreeSequence, LabeledTree, RequirementsMatrix};
use ocst_core::instance::{generate_instance, Instance};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random labeled tree by attaching each vertex of a shuffled order to a
/// uniformly chosen earlier one.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> LabeledTree {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let edges: Vec<(usize, usize)> = (1..n).map(|k| (order[rng.gen_range(0..k)], order[k])).collect();
    LabeledTree::new(n, edges).unwrap()
}

/// All-pairs distances by Floyd-Warshall, 0-based.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)], length: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b) in edges {
        let t = length(a, b);
        d[a - 1][b - 1] = t;
        d[b - 1][a - 1] = t;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn hop_cost(tree: &LabeledTree, req: &RequirementsMatrix) -> f64 {
    let n = tree.n();
    let d = floyd_warshall(n, tree.edges(), |_, _| 1.0);
    let mut c = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            c += req.get(i, j) * d[i - 1][j - 1];
        }
    }
    c
}

/// Whether `edges` forms a spanning tree on `1..=n`, by union-find.
pub fn is_spanning_tree(n: usize, edges: &[(usize, usize)]) -> bool {
    if edges.len() + 1 != n {
        return false;
    }
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Every spanning tree of the instance by scanning all (n-1)-subsets of its
/// admissible edges. Only usable for small edge sets.
pub fn trees_by_subsets(instance: &Instance) -> Vec<LabeledTree> {
    let n = instance.n();
    let edges = instance.edges().to_vec();
    let k = n - 1;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..k).collect();
    if edges.len() < k {
        return out;
    }
    loop {
        let chosen: Vec<(usize, usize)> = pick.iter().map(|&p| edges[p]).collect();
        let mut deg = vec![0usize; n];
        for &(a, b) in &chosen {
            deg[a - 1] += 1;
            deg[b - 1] += 1;
        }
        if deg == instance.degrees().as_slice() && is_spanning_tree(n, &chosen) {
            out.push(LabeledTree::new(n, chosen).unwrap());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] != i + edges.len() - k {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// `(n-2)! / prod (d_i - 1)!`.
pub fn multinomial_count(d: &[usize]) -> u128 {
    let n = d.len();
    let fact = |k: usize| (1..=k as u128).product::<u128>();
    d.iter().fold(fact(n - 2), |acc, &di| acc / fact(di - 1))
}

pub fn integer_requirements<R: Rng>(n: usize, rng: &mut R) -> RequirementsMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = if rng.gen_bool(0.7) { rng.gen_range(1..=20) as f64 } else { 0.0 };
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    RequirementsMatrix::from_rows(rows).unwrap()
}

/// The instance family shared by the oracle-equivalence suites.
pub fn suite_instance(n: usize, seed: u64) -> Instance {
    generate_instance(n, 30, 0.6, None, seed).unwrap()
}

pub fn complete(req: RequirementsMatrix, d: Vec<usize>) -> Instance {
    Instance::complete(req, DegreeSequence::new(d).unwrap()).unwrap()
}
