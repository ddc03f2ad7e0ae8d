use std::collections::HashMap;

use haegan::metrics::{betweenness, closeness, degree_mmd, MetricsReport};
use haegan::tree::{prufer_decode, random_tree, random_trees, TreeGraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// All-pairs shortest path lengths by Floyd-Warshall on the undirected tree.
fn all_pairs(tree: &TreeGraph) -> Vec<Vec<usize>> {
    let n = tree.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (a, b) in tree.edges() {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    d
}

/// In a tree every pair has one shortest path, so `v` lies on the path
/// between `s` and `t` exactly when `d(s,v) + d(v,t) = d(s,t)`.
fn brute_betweenness(tree: &TreeGraph) -> Vec<f64> {
    let n = tree.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let d = all_pairs(tree);
    let pairs = ((n - 1) * (n - 2) / 2) as f64;
    (0..n)
        .map(|v| {
            let mut count = 0usize;
            for s in 0..n {
                for t in s + 1..n {
                    if s != v && t != v && d[s][v] + d[v][t] == d[s][t] {
                        count += 1;
                    }
                }
            }
            count as f64 / pairs
        })
        .collect()
}

fn brute_closeness(tree: &TreeGraph) -> Vec<f64> {
    let n = tree.len();
    let d = all_pairs(tree);
    (0..n)
        .map(|v| {
            let total: usize = d[v].iter().sum();
            if total == 0 {
                0.0
            } else {
                (n - 1) as f64 / total as f64
            }
        })
        .collect()
}

#[test]
fn prufer_trees_on_four_nodes_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 100_000;
    let mut counts: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    for _ in 0..samples {
        let t = random_tree(&mut rng, 4, 4).unwrap();
        let mut edges: Vec<(usize, usize)> = t.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        *counts.entry(edges).or_default() += 1;
    }
    // Cayley: 4^2 labeled trees.
    assert_eq!(counts.len(), 16);
    let p = 1.0 / 16.0;
    let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
    for (edges, &c) in &counts {
        let dev = (c as f64 - samples as f64 * p).abs();
        assert!(dev <= 3.0 * sigma, "{edges:?}: {c}");
    }
}

#[test]
fn every_prufer_sequence_of_length_three_gives_a_distinct_tree() {
    let mut seen = std::collections::HashSet::new();
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..5 {
                let t = prufer_decode(&[a, b, c]).unwrap();
                assert!(t.is_valid());
                assert_eq!(t.len(), 5);
                let mut edges: Vec<(usize, usize)> = t.edges().into_iter().map(|(x, y)| (x.min(y), x.max(y))).collect();
                edges.sort_unstable();
                seen.insert(edges);
            }
        }
    }
    assert_eq!(seen.len(), 125);
}

#[test]
fn dataset_sizes_respect_the_node_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trees = random_trees(&mut rng, 300, 20, 50).unwrap();
    assert!(trees.iter().all(|t| (20..=50).contains(&t.len()) && t.is_valid()));
    assert!(trees.iter().any(|t| t.len() == 20) && trees.iter().any(|t| t.len() == 50));
    assert!(random_tree(&mut rng, 5, 4).is_err());
}

#[test]
fn identical_sets_have_zero_mmd() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_trees(&mut rng, 30, 5, 15).unwrap();
    let b = random_trees(&mut rng, 30, 5, 15).unwrap();
    assert_eq!(degree_mmd(&a, &a, 1.0), 0.0);
    let cross = degree_mmd(&a, &b, 1.0);
    assert!(cross.is_finite() && cross >= 0.0);
    let report = MetricsReport::compute(&a, &a, 1.0);
    assert!(report.all_finite());
    assert_eq!(report.betweenness_avg_diff, 0.0);
    assert_eq!(report.closeness_avg_diff, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn centralities_match_brute_force(seed in any::<u64>(), n in 1usize..=8) {
        let t = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), n, n).unwrap();
        for (a, b) in betweenness(&t).iter().zip(brute_betweenness(&t)) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        for (a, b) in closeness(&t).iter().zip(brute_closeness(&t)) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn random_trees_are_valid(seed in any::<u64>(), lo in 1usize..30, extra in 0usize..30) {
        let t = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), lo, lo + extra).unwrap();
        prop_assert!(t.is_valid());
        prop_assert_eq!(t.edges().len(), t.len() - 1);
        prop_assert_eq!(t.dfs_edges().len(), 2 * (t.len() - 1));
        let text = t.to_string();
        prop_assert_eq!(text.parse::<TreeGraph>().unwrap(), t);
    }
}
