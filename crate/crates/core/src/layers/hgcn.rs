use rand::RngCore;

use super::{ops, HLinear};
use crate::autodiff::{Graph, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Neighbor lists of an undirected graph. Each list is the aggregation order
/// used by [`HGcn`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn from_lists(neighbors: Vec<Vec<usize>>) -> Self {
        Self { neighbors }
    }

    /// Undirected edges; each endpoint lists the other in edge order.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        Self { neighbors }
    }

    /// Puts every node first in its own list (if absent).
    pub fn with_self_loops(mut self) -> Self {
        for (v, list) in self.neighbors.iter_mut().enumerate() {
            if !list.contains(&v) {
                list.insert(0, v);
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }
}

/// Hyperbolic graph convolution: each node becomes the centroid of the
/// transformed features of its neighborhood (self-loop included).
#[derive(Debug, Clone)]
pub struct HGcn {
    pub linear: HLinear,
}

impl HGcn {
    pub fn new(linear: HLinear) -> Self {
        Self { linear }
    }

    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: Tensor,
        adj: &Adjacency,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<Tensor> {
        if adj.len() != g.shape(x).0 {
            return Err(Error::Shape { op: "hgcn", left: g.shape(x), right: (adj.len(), 0) });
        }
        for v in 0..adj.len() {
            if !adj.neighbors(v).contains(&v) {
                return Err(Error::Degenerate(format!("node {v} has no self-loop")));
            }
        }
        let h = self.linear.forward(g, store, x, rng)?;
        ops::centroid(g, h, adj.neighbors.clone(), None, self.linear.config.curvature)
    }
}
