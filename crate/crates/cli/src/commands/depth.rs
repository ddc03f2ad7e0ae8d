//! Gradient norms through a deep stack of concatenation blocks.
//!
//! Block `l` maps `x` to `HLinear_{2d→d}(concat(HLinear_{d→d}(x),
//! HLinear_{d→d}(x)))`. Inputs are drawn from a wrapped normal at the origin,
//! targets from a wrapped normal at `E2H(1)` with three times the variance,
//! and the stack is trained to minimize the mean squared geodesic distance
//! between its outputs and the targets.

use haegan::autodiff::{Graph, ParamStore, Tensor};
use haegan::layers::{ops, HLinear, HLinearConfig, WrappedNormal};
use haegan::lorentz::{self, LorentzPoint};
use haegan::optim::{AdamConfig, RiemannianAdam};
use haegan::Curvature;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConcatMethod;
use crate::config::{RunConfig, Scale};
use crate::error::{CliError, Result};
use crate::output::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthConfig {
    pub seed: u64,
    pub curvature: f64,
    pub dim: usize,
    /// Network depths to run, one run per depth and method.
    pub blocks: Vec<usize>,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Initial range scale of every hyperbolic linear layer.
    pub init_range: f64,
    /// Leading blocks and steps averaged in the summary.
    pub summary_blocks: usize,
    pub summary_steps: usize,
}

impl RunConfig for DepthConfig {
    const NAME: &'static str = "concat-depth";

    fn preset(scale: Scale) -> Self {
        let (blocks, steps) = match scale {
            Scale::Paper => (vec![64, 128], 200),
            Scale::Ci => (vec![64], 100),
        };
        Self {
            seed: 0,
            curvature: -1.0,
            dim: 64,
            blocks,
            steps,
            batch_size: 32,
            lr: 1e-3,
            init_range: 1.0,
            summary_blocks: 20,
            summary_steps: 100,
        }
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        Curvature::new(self.curvature)?;
        if self.dim == 0 || !(self.init_range > 0.0) || self.blocks.contains(&0) || self.batch_size == 0 {
            return Err(CliError::Config("dim, blocks and batch size must be positive".into()));
        }
        Ok(())
    }
}

struct Block {
    left: HLinear,
    right: HLinear,
    merge: HLinear,
}

struct DeepNet {
    store: ParamStore,
    blocks: Vec<Block>,
    method: ConcatMethod,
    k: Curvature,
}

impl DeepNet {
    fn new(cfg: &DepthConfig, depth: usize, method: ConcatMethod, k: Curvature, rng: &mut ChaCha8Rng) -> Self {
        let lin = HLinearConfig { curvature: k, init_range: cfg.init_range, ..Default::default() };
        let mut store = ParamStore::new();
        let d = cfg.dim;
        let blocks = (0..depth)
            .map(|l| Block {
                left: HLinear::new(&mut store, &format!("block{l}.left"), d, d, lin, rng),
                right: HLinear::new(&mut store, &format!("block{l}.right"), d, d, lin, rng),
                merge: HLinear::new(&mut store, &format!("block{l}.merge"), 2 * d, d, lin, rng),
            })
            .collect();
        Self { store, blocks, method, k }
    }

    fn forward(&self, g: &mut Graph, x: Tensor) -> haegan::Result<Tensor> {
        let mut h = x;
        for b in &self.blocks {
            let l = b.left.forward(g, &self.store, h, None)?;
            let r = b.right.forward(g, &self.store, h, None)?;
            let cat = self.method.apply(g, &[l, r], self.k)?;
            h = b.merge.forward(g, &self.store, cat, None)?;
        }
        Ok(h)
    }

    /// Euclidean norm of the gradient of each layer of each block.
    fn layer_norms(&self) -> Vec<[f64; 3]> {
        let norm = |layer: &HLinear| {
            layer.param_ids().iter().map(|&id| self.store.get(id).grad.frobenius_sq()).sum::<f64>().sqrt()
        };
        self.blocks.iter().map(|b| [norm(&b.left), norm(&b.right), norm(&b.merge)]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRun {
    pub blocks: usize,
    pub method: ConcatMethod,
    /// Per step, per block: mean gradient norm of the three layers.
    pub block_norms: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    /// Steps whose loss or gradient was not finite (the update is skipped).
    pub nan_events: usize,
    pub first_nan_step: Option<usize>,
}

impl DepthRun {
    /// Mean of the finite block norms over the leading `blocks` blocks and
    /// `steps` steps.
    pub fn leading_mean(&self, blocks: usize, steps: usize) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for row in self.block_norms.iter().take(steps) {
            for &v in row.iter().take(blocks) {
                if v.is_finite() {
                    sum += v;
                    count += 1;
                }
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }
}

/// Trains one stack and records its per-block gradient norms.
pub fn run_depth(cfg: &DepthConfig, depth: usize, method: ConcatMethod) -> Result<DepthRun> {
    let k = Curvature::new(cfg.curvature)?;
    // The same seed for both methods gives identical initial weights and data.
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ depth as u64);
    let mut net = DeepNet::new(cfg, depth, method, k, &mut init_rng);
    let input = WrappedNormal::standard(LorentzPoint::origin(cfg.dim, k));
    let target = WrappedNormal::isotropic(lorentz::e2h(&vec![1.0; cfg.dim], k), 3.0)?;
    let mut data_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    data_rng.set_stream(depth as u64);
    let mut opt = RiemannianAdam::new(AdamConfig::new(cfg.lr, 0.9, 0.999));

    let mut run =
        DepthRun { blocks: depth, method, block_norms: Vec::new(), losses: Vec::new(), nan_events: 0, first_nan_step: None };
    for step in 0..cfg.steps {
        let x = input.sample_batch(&mut data_rng, cfg.batch_size);
        let y = target.sample_batch(&mut data_rng, cfg.batch_size);
        let mut g = Graph::new();
        let xt = g.constant(x);
        let yt = g.constant(y);
        let loss = net.forward(&mut g, xt).and_then(|out| {
            let d = ops::rowwise_distance(&mut g, out, yt, k)?;
            let sq = g.square(d);
            Ok(g.mean(sq))
        });
        let (value, finite) = match loss {
            Ok(loss) => {
                let value = g.value(loss).item();
                net.store.zero_grad();
                if value.is_finite() {
                    g.backward(loss)?;
                    g.accumulate_grads(&mut net.store);
                }
                (value, value.is_finite())
            }
            // A degenerate forward pass counts as a numerical failure.
            Err(haegan::Error::Degenerate(_)) => (f64::NAN, false),
            Err(e) => return Err(e.into()),
        };
        let norms = if finite { net.layer_norms() } else { vec![[f64::NAN; 3]; depth] };
        let stepped = finite && opt.step(&mut net.store).is_ok();
        if !stepped {
            run.nan_events += 1;
            run.first_nan_step.get_or_insert(step);
        }
        run.block_norms.push(norms.iter().map(|n| (n[0] + n[1] + n[2]) / 3.0).collect());
        run.losses.push(value);
    }
    Ok(run)
}

/// Runs every depth with both concatenations and writes per-step block
/// norms, losses and a summary.
pub fn execute(cfg: &DepthConfig, dir: &mut RunDir) -> Result<Vec<DepthRun>> {
    let mut runs = Vec::new();
    let mut summary = dir.table(
        "summary.csv",
        &["blocks", "method", "leading_blocks", "leading_steps", "leading_mean_norm", "nan_events", "final_loss"],
    )?;
    for &depth in &cfg.blocks {
        for method in ConcatMethod::BOTH {
            let run = run_depth(cfg, depth, method)?;
            let tag = format!("L{depth}-{}", method.name());
            let mut norms = dir.table(&format!("grad_norms-{tag}.csv"), &["step", "block", "mean_grad_norm"])?;
            for (step, row) in run.block_norms.iter().enumerate() {
                for (block, &v) in row.iter().enumerate() {
                    norms.row(vec![step.into(), block.into(), v.into()])?;
                }
            }
            norms.finish()?;
            let mut losses = dir.table(&format!("loss-{tag}.csv"), &["step", "loss"])?;
            for (step, &l) in run.losses.iter().enumerate() {
                losses.row(vec![step.into(), l.into()])?;
            }
            losses.finish()?;
            summary.row(vec![
                depth.into(),
                method.name().into(),
                cfg.summary_blocks.into(),
                cfg.summary_steps.into(),
                run.leading_mean(cfg.summary_blocks, cfg.summary_steps).into(),
                run.nan_events.into(),
                run.losses.last().copied().unwrap_or(f64::NAN).into(),
            ])?;
            runs.push(run);
        }
    }
    summary.finish()?;
    // Only the direct runs are expected to stay finite.
    if let Some(bad) = runs.iter().find(|r| r.method == ConcatMethod::Direct && r.nan_events > 0) {
        return Err(CliError::Numerical {
            what: format!("direct concatenation with {} blocks", bad.blocks),
            step: bad.first_nan_step.unwrap_or(0),
        });
    }
    Ok(runs)
}
