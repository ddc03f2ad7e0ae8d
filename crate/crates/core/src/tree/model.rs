use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::TreeGraph;
use crate::autodiff::{Graph, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::layers::{ops, Adjacency, HCDist, HEmbed, HGcn, HLinear, HLinearConfig};
use crate::lorentz::{Curvature, LorentzPoint};
use crate::matrix::Matrix;

/// Topological decision: return to the parent.
pub const BACKTRACK: usize = 0;
/// Topological decision: create a new child.
pub const EXPAND: usize = 1;

/// Scalar feature attached to every node by the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFeature {
    /// Every node gets 1. With centroid aggregation every node embedding is
    /// then identical, so the tree embedding cannot depend on the tree.
    Constant,
    /// `ln(1 + degree)`.
    #[default]
    LogDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeAutoencoderConfig {
    pub dim: usize,
    pub encoder_depth: usize,
    pub node_feature: NodeFeature,
    pub curvature: f64,
    pub dropout: f64,
}

impl Default for TreeAutoencoderConfig {
    fn default() -> Self {
        Self { dim: 32, encoder_depth: 2, node_feature: NodeFeature::LogDegree, curvature: -1.0, dropout: 0.0 }
    }
}

/// Hyperbolic tree encoder and depth-first decoder sharing one parameter
/// store.
#[derive(Debug, Clone)]
pub struct TreeAutoencoder {
    pub config: TreeAutoencoderConfig,
    pub curvature: Curvature,
    pub store: ParamStore,
    encoder: Vec<HGcn>,
    msg_in: HLinear,
    node_embed: HEmbed,
    msg_out: HLinear,
    topo_in: HLinear,
    topo_mix: HLinear,
    topo_head: HCDist,
}

#[derive(Debug, Clone)]
pub enum DecodeMode<'a> {
    /// Replay the ground-truth decisions of a tree.
    TeacherForced(&'a TreeGraph),
    /// Argmax decisions (ties backtrack), at most `max_nodes` nodes.
    Free { max_nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeStep {
    /// Current node, in creation order.
    pub node: usize,
    /// `[p(backtrack), p(expand)]`.
    pub probs: [f64; 2],
    /// Ground-truth decision in teacher-forced mode.
    pub target: Option<usize>,
    pub action: usize,
}

#[derive(Debug, Clone)]
pub struct DecodeOutput {
    /// Nodes numbered in creation order; equal to the input's
    /// [`TreeGraph::dfs_canonical`] in teacher-forced mode.
    pub tree: TreeGraph,
    pub steps: Vec<DecodeStep>,
    /// One `1 × 2` logit row per step.
    pub logits: Vec<Tensor>,
    /// Every message created, keyed by directed edge in creation ids.
    pub messages: Vec<((usize, usize), Tensor)>,
    /// Set when free decoding hit `max_nodes` and expansion was refused.
    pub truncated: bool,
}

struct Message {
    via_msg: Tensor,
    via_topo: Tensor,
}

impl TreeAutoencoder {
    pub fn new<R: RngCore + ?Sized>(config: TreeAutoencoderConfig, rng: &mut R) -> Result<Self> {
        if config.dim == 0 || config.encoder_depth == 0 {
            return Err(Error::Config("tree autoencoder needs dim and encoder depth of at least 1".into()));
        }
        let k = Curvature::new(config.curvature)?;
        let d = config.dim;
        let cfg = HLinearConfig { curvature: k, dropout: config.dropout, ..Default::default() };
        let mut store = ParamStore::new();
        let encoder = (0..config.encoder_depth)
            .map(|i| {
                let input = if i == 0 { 1 } else { d };
                HGcn::new(HLinear::new(&mut store, &format!("encoder.{i}"), input, d, cfg, rng))
            })
            .collect();
        let msg_in = HLinear::new(&mut store, "decoder.msg_in", d, d, cfg, rng);
        let node_embed = HEmbed::new(&mut store, "decoder.node_embed", 1, d, k, rng);
        let msg_out = HLinear::new(&mut store, "decoder.msg_out", 2 * d, d, cfg, rng);
        let topo_in = HLinear::new(&mut store, "decoder.topo_in", d, d, cfg, rng);
        let topo_mix = HLinear::new(&mut store, "decoder.topo_mix", 2 * d, d, cfg, rng);
        let topo_head = HCDist::new(&mut store, "decoder.topo_head", d, 2, k, rng);
        Ok(Self { config, curvature: k, store, encoder, msg_in, node_embed, msg_out, topo_in, topo_mix, topo_head })
    }

    fn feature(&self, tree: &TreeGraph, v: usize) -> f64 {
        match self.config.node_feature {
            NodeFeature::Constant => 1.0,
            NodeFeature::LogDegree => (tree.degree(v) as f64).ln_1p(),
        }
    }

    /// Tree embeddings, one row per tree, using `store` for the parameters.
    pub fn encode_with(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        trees: &[&TreeGraph],
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<Tensor> {
        if trees.is_empty() {
            return Err(Error::Degenerate("no trees to encode".into()));
        }
        let total: usize = trees.iter().map(|t| t.len()).sum();
        let mut feats = Vec::with_capacity(total);
        let mut lists = Vec::with_capacity(total);
        let mut segments = Vec::with_capacity(trees.len());
        let mut offset = 0;
        for t in trees {
            for (v, nb) in t.neighbors().into_iter().enumerate() {
                feats.push(self.feature(t, v));
                lists.push(nb.into_iter().map(|u| u + offset).collect());
            }
            segments.push((offset..offset + t.len()).collect());
            offset += t.len();
        }
        let adj = Adjacency::from_lists(lists).with_self_loops();
        let x = g.constant(Matrix::from_vec(total, 1, feats));
        let mut h = ops::e2h(g, x, self.curvature)?;
        for layer in &self.encoder {
            h = layer.forward(g, store, h, &adj, crate::layers::reborrow(&mut rng))?;
        }
        ops::centroid(g, h, segments, None, self.curvature)
    }

    pub fn encode(&self, g: &mut Graph, trees: &[&TreeGraph]) -> Result<Tensor> {
        self.encode_with(g, &self.store, trees, None)
    }

    /// Embeddings of `trees` as plain values.
    pub fn embed(&self, trees: &[TreeGraph]) -> Result<Matrix> {
        let mut g = Graph::new();
        let refs: Vec<&TreeGraph> = trees.iter().collect();
        let z = self.encode(&mut g, &refs)?;
        Ok(g.value(z).clone())
    }

    fn message(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        inward: &[Tensor],
        rng: &mut Option<&mut dyn RngCore>,
    ) -> Result<(Tensor, Message)> {
        let k = self.curvature;
        let z_nei = if inward.is_empty() {
            g.constant(Matrix::row_vector(LorentzPoint::origin(self.config.dim, k).coords()))
        } else {
            let stacked = g.concat_rows(inward)?;
            ops::centroid(g, stacked, vec![(0..inward.len()).collect()], None, k)?
        };
        let one = g.constant(Matrix::scalar(1.0));
        let z_cur = self.node_embed.forward(g, store, one)?;
        let cat = ops::direct_concat(g, &[z_cur, z_nei], k)?;
        let h = self.msg_out.forward(g, store, cat, crate::layers::reborrow(rng))?;
        let cached = self.transform(g, store, h, rng)?;
        Ok((h, cached))
    }

    fn transform(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        h: Tensor,
        rng: &mut Option<&mut dyn RngCore>,
    ) -> Result<Message> {
        let via_msg = self.msg_in.forward(g, store, h, crate::layers::reborrow(rng))?;
        let via_topo = self.topo_in.forward(g, store, h, crate::layers::reborrow(rng))?;
        Ok(Message { via_msg, via_topo })
    }

    /// Depth-first decoding of the embedding row `z` (`1 × (d+1)`).
    ///
    /// At node `i` the head sees the centroid of all transformed inward
    /// messages concatenated with `z`. Creating child `c` sends
    /// `h_{i,c}` built from the inward messages of `i`; backtracking from
    /// `i` to its parent `p` sends `h_{i,p}` built from the inward messages
    /// of `i` other than `h_{p,i}`. The root receives the origin as a dummy
    /// parent message, transformed like any other message; a leaf has no
    /// other inward messages and aggregates to the origin itself. Keeping the
    /// two apart matters: with identical node features a leaf's reply would
    /// otherwise equal the root's first message, and a node could not tell
    /// how many of its children have returned.
    pub fn decode_with(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        z: Tensor,
        mode: DecodeMode<'_>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<DecodeOutput> {
        let k = self.curvature;
        let d = self.config.dim;
        if g.shape(z) != (1, d + 1) {
            return Err(Error::Shape { op: "tree_decode", left: g.shape(z), right: (1, d + 1) });
        }
        let (truth, max_nodes) = match mode {
            DecodeMode::TeacherForced(t) => (Some(t), t.len()),
            DecodeMode::Free { max_nodes } => (None, max_nodes.max(1)),
        };
        let origin = g.constant(Matrix::row_vector(LorentzPoint::origin(d, k).coords()));
        let pad = self.transform(g, store, origin, &mut rng)?;

        // Per created node: parent, original id (teacher mode), inward
        // messages as (sender, message), number of children created.
        let mut parent: Vec<Option<usize>> = vec![None];
        let mut original = vec![0usize];
        let mut inward: Vec<Vec<(Option<usize>, Message)>> = vec![vec![(None, pad)]];
        let mut child_count = vec![0usize];
        let mut steps = Vec::new();
        let mut logits = Vec::new();
        let mut messages = Vec::new();
        let mut truncated = false;
        let mut cur = 0usize;

        loop {
            let topo: Vec<Tensor> = inward[cur].iter().map(|(_, m)| m.via_topo).collect();
            let stacked = g.concat_rows(&topo)?;
            let z_nei = ops::centroid(g, stacked, vec![(0..topo.len()).collect()], None, k)?;
            let cat = ops::direct_concat(g, &[z_nei, z], k)?;
            let mixed = self.topo_mix.forward(g, store, cat, crate::layers::reborrow(&mut rng))?;
            let logit = self.topo_head.forward(g, store, mixed)?;
            let row = g.value(logit).row(0).to_vec();
            let probs = softmax2(row[0], row[1]);

            let target = truth.map(|t| {
                if child_count[cur] < t.children(original[cur]).len() {
                    EXPAND
                } else {
                    BACKTRACK
                }
            });
            let mut action = match target {
                Some(a) => a,
                None if probs[1] > probs[0] => EXPAND,
                None => BACKTRACK,
            };
            if action == EXPAND && parent.len() >= max_nodes {
                truncated = true;
                action = BACKTRACK;
            }
            steps.push(DecodeStep { node: cur, probs, target, action });
            logits.push(logit);

            if action == EXPAND {
                let sources: Vec<Tensor> = inward[cur].iter().map(|(_, m)| m.via_msg).collect();
                let (h, cached) = self.message(g, store, &sources, &mut rng)?;
                let c = parent.len();
                parent.push(Some(cur));
                original.push(truth.map_or(c, |t| t.children(original[cur])[child_count[cur]]));
                child_count[cur] += 1;
                child_count.push(0);
                inward.push(vec![(Some(cur), cached)]);
                messages.push(((cur, c), h));
                cur = c;
            } else {
                let Some(p) = parent[cur] else { break };
                let sources: Vec<Tensor> =
                    inward[cur].iter().filter(|(s, _)| *s != Some(p)).map(|(_, m)| m.via_msg).collect();
                let (h, cached) = self.message(g, store, &sources, &mut rng)?;
                inward[p].push((Some(cur), cached));
                messages.push(((cur, p), h));
                cur = p;
            }
        }

        let parents: Vec<usize> = parent[1..].iter().map(|p| p.expect("non-root")).collect();
        let tree = TreeGraph::from_parents(&parents)?;
        Ok(DecodeOutput { tree, steps, logits, messages, truncated })
    }

    pub fn decode(&self, g: &mut Graph, z: Tensor, mode: DecodeMode<'_>) -> Result<DecodeOutput> {
        self.decode_with(g, &self.store, z, mode, None)
    }

    /// Free decoding of a plain embedding row.
    pub fn decode_point(&self, z: &[f64], max_nodes: usize) -> Result<DecodeOutput> {
        let mut g = Graph::new();
        let zt = g.constant(Matrix::row_vector(z));
        self.decode(&mut g, zt, DecodeMode::Free { max_nodes })
    }
}

fn softmax2(a: f64, b: f64) -> [f64; 2] {
    let m = a.max(b);
    let (ea, eb) = ((a - m).exp(), (b - m).exp());
    let s = ea + eb;
    [ea / s, eb / s]
}
