//! Unlabeled rooted trees, the hyperbolic tree autoencoder and the latent GAN
//! pipeline that samples new trees.

mod model;
mod pipeline;

pub use model::{
    DecodeMode, DecodeOutput, DecodeStep, NodeFeature, TreeAutoencoder, TreeAutoencoderConfig, BACKTRACK, EXPAND,
};
pub use pipeline::{
    ae_train, haegan_sample, teacher_forced_accuracy, AeConfig, AeReport, PipelineConfig, PipelineReport,
    haegan_pipeline,
};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// A rooted tree on nodes `0..n` with root 0.
///
/// `children[v]` lists the children of `v` in increasing id order, which is
/// the order used by depth-first traversals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeGraph {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl TreeGraph {
    pub fn single() -> Self {
        Self { parent: vec![None], children: vec![Vec::new()] }
    }

    /// Builds a tree from `parents[i-1] = parent of i` for `i = 1..n`.
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        let n = parents.len() + 1;
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (i, &p) in parents.iter().enumerate() {
            let v = i + 1;
            if p >= n || p == v {
                return Err(Error::Format(format!("node {v} has invalid parent {p}")));
            }
            parent[v] = Some(p);
            children[p].push(v);
        }
        let tree = Self { parent, children };
        if tree.dfs_order().len() != n {
            return Err(Error::Format("parent array contains a cycle".into()));
        }
        Ok(tree)
    }

    /// Roots the undirected tree given by `edges` at node 0.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Format("a tree needs at least one node".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::Format(format!("{} edges cannot form a tree on {n} nodes", edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::Format(format!("invalid edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(v);
                    queue.push_back(u);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("edges do not connect every node".into()));
        }
        let mut children = vec![Vec::new(); n];
        for v in 1..n {
            children[parent[v].expect("connected")].push(v);
        }
        Ok(Self { parent, children })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..self.len()).map(|v| (self.parent[v].expect("non-root"), v)).collect()
    }

    /// Neighbor lists (parent first, then children).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|v| self.parent[v].into_iter().chain(self.children[v].iter().copied()).collect())
            .collect()
    }

    /// Nodes in depth-first preorder from the root.
    pub fn dfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![0];
        let mut seen = vec![false; self.len()];
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            order.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        order
    }

    /// Directed edges in the order a depth-first traversal crosses them:
    /// `(parent, child)` on the way down and `(child, parent)` on the way
    /// back. Always `2 (n - 1)` entries.
    pub fn dfs_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.len().saturating_sub(1));
        self.walk(0, &mut out);
        out
    }

    fn walk(&self, v: usize, out: &mut Vec<(usize, usize)>) {
        // Iterative to survive deep paths.
        let mut stack = vec![(v, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if let Some(&c) = self.children[v].get(i) {
                out.push((v, c));
                stack.push((v, i + 1));
                stack.push((c, 0));
            } else if let Some(p) = self.parent[v] {
                out.push((v, p));
            }
        }
    }

    /// The same tree relabeled so that ids follow depth-first preorder.
    /// Two trees with equal ordered structure have equal canonical forms.
    pub fn dfs_canonical(&self) -> Self {
        let order = self.dfs_order();
        let mut new_id = vec![0; self.len()];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i;
        }
        let parents: Vec<usize> = order[1..].iter().map(|&v| new_id[self.parent[v].expect("non-root")]).collect();
        Self::from_parents(&parents).expect("relabeling preserves validity")
    }

    /// Whether the tree is connected, acyclic and rooted at 0.
    pub fn is_valid(&self) -> bool {
        !self.is_empty()
            && self.parent[0].is_none()
            && (1..self.len()).all(|v| self.parent[v].is_some())
            && self.dfs_order().len() == self.len()
    }

    /// Parents of nodes `1..n`.
    pub fn parent_array(&self) -> Vec<usize> {
        (1..self.len()).map(|v| self.parent[v].expect("non-root")).collect()
    }
}

/// One line: the node count followed by the parents of nodes `1..n`.
impl fmt::Display for TreeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.len())?;
        for p in self.parent_array() {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

impl FromStr for TreeGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut fields = s.split_whitespace().map(|t| t.parse::<usize>());
        let n = fields
            .next()
            .ok_or_else(|| Error::Format("empty tree line".into()))?
            .map_err(|e| Error::Format(format!("bad node count: {e}")))?;
        let parents: Vec<usize> = fields
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad parent entry: {e}")))?;
        if n == 0 || parents.len() != n - 1 {
            return Err(Error::Format(format!("node count {n} does not match {} parents", parents.len())));
        }
        Self::from_parents(&parents)
    }
}

/// Decodes a Prüfer sequence over `0..n` with `n = seq.len() + 2` and roots
/// the result at node 0.
pub fn prufer_decode(seq: &[usize]) -> Result<TreeGraph> {
    let n = seq.len() + 2;
    if let Some(&bad) = seq.iter().find(|&&s| s >= n) {
        return Err(Error::Format(format!("Prüfer entry {bad} out of range for {n} nodes")));
    }
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    TreeGraph::from_edges(n, &edges)
}

/// A uniformly random labeled tree on `n ~ U{min_nodes..=max_nodes}` nodes,
/// rooted at 0.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, min_nodes: usize, max_nodes: usize) -> Result<TreeGraph> {
    if min_nodes == 0 || min_nodes > max_nodes {
        return Err(Error::Config(format!("invalid node range [{min_nodes}, {max_nodes}]")));
    }
    let n = rng.random_range(min_nodes..=max_nodes);
    match n {
        1 => Ok(TreeGraph::single()),
        2 => TreeGraph::from_parents(&[0]),
        _ => {
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
            prufer_decode(&seq)
        }
    }
}

/// `count` random trees.
pub fn random_trees<R: Rng + ?Sized>(rng: &mut R, count: usize, min_nodes: usize, max_nodes: usize) -> Result<Vec<TreeGraph>> {
    (0..count).map(|_| random_tree(rng, min_nodes, max_nodes)).collect()
}

/// One tree per line.
pub fn write_trees<W: std::io::Write>(trees: &[TreeGraph], mut w: W) -> Result<()> {
    for t in trees {
        writeln!(w, "{t}")?;
    }
    Ok(())
}

pub fn read_trees<R: std::io::BufRead>(r: R) -> Result<Vec<TreeGraph>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(line.parse()?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_sequence_gives_star_at_zero() {
        let t = prufer_decode(&[0]).unwrap();
        assert_eq!(t.children(0), &[1, 2]);
        assert_eq!(t.degree(0), 2);
    }

    #[test]
    fn dfs_edges_cross_each_edge_twice() {
        let t = TreeGraph::from_parents(&[0, 0, 1, 1, 3]).unwrap();
        let e = t.dfs_edges();
        assert_eq!(e, vec![(0, 1), (1, 3), (3, 5), (5, 3), (3, 1), (1, 4), (4, 1), (1, 0), (0, 2), (2, 0)]);
    }

    #[test]
    fn text_round_trip() {
        let t = TreeGraph::from_parents(&[0, 0, 2, 2]).unwrap();
        assert_eq!(t.to_string(), "5 0 0 2 2");
        assert_eq!(t.to_string().parse::<TreeGraph>().unwrap(), t);
        assert_eq!("1".parse::<TreeGraph>().unwrap(), TreeGraph::single());
        assert!("3 0".parse::<TreeGraph>().is_err());
        assert!("3 2 1".parse::<TreeGraph>().is_err());
    }

    #[test]
    fn canonical_form_follows_preorder() {
        let t = TreeGraph::from_edges(4, &[(0, 3), (3, 1), (0, 2)]).unwrap();
        let c = t.dfs_canonical();
        assert_eq!(c.parent_array(), vec![0, 0, 2]);
    }
}
