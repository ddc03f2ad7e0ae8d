//! Comparisons between two sets of trees: degree-distribution MMD and
//! differences of average centralities.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::tree::TreeGraph;

/// Fraction of nodes with each degree; entry `k` is degree `k`.
pub fn degree_histogram(tree: &TreeGraph) -> Vec<f64> {
    let n = tree.len();
    let degrees: Vec<usize> = (0..n).map(|v| tree.degree(v)).collect();
    let max = degrees.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0.0; max + 1];
    for d in degrees {
        hist[d] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= n as f64);
    hist
}

/// First Wasserstein distance between two distributions on `0, 1, 2, ...`.
pub fn wasserstein1(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let (mut cp, mut cq, mut total) = (0.0, 0.0, 0.0);
    for i in 0..len {
        cp += p.get(i).copied().unwrap_or(0.0);
        cq += q.get(i).copied().unwrap_or(0.0);
        total += (cp - cq).abs();
    }
    total
}

/// `exp(-W1(p, q)^2 / (2 σ^2))`.
pub fn gaussian_w1_kernel(p: &[f64], q: &[f64], sigma: f64) -> f64 {
    let w = wasserstein1(p, q);
    (-w * w / (2.0 * sigma * sigma)).exp()
}

/// Squared MMD (biased V-statistic) between two sets of histograms.
pub fn mmd(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mean_k = |x: &[Vec<f64>], y: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for p in x {
            for q in y {
                s += gaussian_w1_kernel(p, q, sigma);
            }
        }
        s / (x.len() * y.len()) as f64
    };
    mean_k(a, a) + mean_k(b, b) - 2.0 * mean_k(a, b)
}

/// Degree MMD between two tree sets.
pub fn degree_mmd(a: &[TreeGraph], b: &[TreeGraph], sigma: f64) -> f64 {
    let ha: Vec<_> = a.iter().map(degree_histogram).collect();
    let hb: Vec<_> = b.iter().map(degree_histogram).collect();
    mmd(&ha, &hb, sigma)
}

fn bfs_distances(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Normalized betweenness centrality by dependency accumulation from every
/// source. Values are divided by `(n-1)(n-2)/2`; trees with fewer than
/// three nodes get all zeros.
pub fn betweenness(tree: &TreeGraph) -> Vec<f64> {
    let n = tree.len();
    let adj = tree.neighbors();
    let mut cb = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    if n < 3 {
        return vec![0.0; n];
    }
    // Each unordered pair was counted from both ends.
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    cb.iter().map(|c| c * scale).collect()
}

/// Normalized closeness `(n-1) / Σ_u d(v, u)`; zero for a single node.
pub fn closeness(tree: &TreeGraph) -> Vec<f64> {
    let n = tree.len();
    let adj = tree.neighbors();
    (0..n)
        .map(|v| {
            let total: usize = bfs_distances(&adj, v).iter().sum();
            if total == 0 {
                0.0
            } else {
                (n - 1) as f64 / total as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centrality {
    Betweenness,
    Closeness,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean over trees of the per-tree average centrality.
pub fn average_centrality(trees: &[TreeGraph], kind: Centrality) -> f64 {
    let per_tree: Vec<f64> = trees
        .iter()
        .map(|t| match kind {
            Centrality::Betweenness => mean(&betweenness(t)),
            Centrality::Closeness => mean(&closeness(t)),
        })
        .collect();
    mean(&per_tree)
}

/// `|average_centrality(a) - average_centrality(b)|`.
pub fn centrality_avg_diff(a: &[TreeGraph], b: &[TreeGraph], kind: Centrality) -> f64 {
    (average_centrality(a, kind) - average_centrality(b, kind)).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub degree_mmd: f64,
    pub betweenness_avg_diff: f64,
    pub closeness_avg_diff: f64,
    pub generated: usize,
    pub reference: usize,
    pub sigma: f64,
}

impl MetricsReport {
    pub fn compute(generated: &[TreeGraph], reference: &[TreeGraph], sigma: f64) -> Self {
        Self {
            degree_mmd: degree_mmd(generated, reference, sigma),
            betweenness_avg_diff: centrality_avg_diff(generated, reference, Centrality::Betweenness),
            closeness_avg_diff: centrality_avg_diff(generated, reference, Centrality::Closeness),
            generated: generated.len(),
            reference: reference.len(),
            sigma,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.degree_mmd.is_finite() && self.betweenness_avg_diff.is_finite() && self.closeness_avg_diff.is_finite()
    }
}
