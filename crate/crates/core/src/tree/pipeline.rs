use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{DecodeMode, TreeAutoencoder, TreeAutoencoderConfig};
use super::{random_trees, TreeGraph};
use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::optim::{AdamConfig, RiemannianAdam, StepLr};
use crate::wgan::{self, GanConfig, GanModel, NoCallbacks, TrainReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub betas: (f64, f64),
    /// Learning-rate decay interval in optimizer steps (0 disables it).
    pub lr_step: usize,
    pub lr_gamma: f64,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self { epochs: 20, batch_size: 32, lr: 5e-3, betas: (0.0, 0.999), lr_step: 20000, lr_gamma: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AeReport {
    /// Mean cross-entropy per optimizer step.
    pub loss_history: Vec<f64>,
    /// Mean of the step losses in each epoch.
    pub epoch_loss: Vec<f64>,
    /// Step at which a non-finite loss or gradient stopped training.
    pub nan_step: Option<usize>,
}

/// Mean per-decision cross-entropy of teacher-forced decoding over `trees`,
/// as a graph node.
fn batch_loss(
    ae: &TreeAutoencoder,
    g: &mut Graph,
    store: &crate::autodiff::ParamStore,
    trees: &[&TreeGraph],
    rng: &mut dyn RngCore,
) -> Result<crate::autodiff::Tensor> {
    let z = ae.encode_with(g, store, trees, Some(&mut *rng))?;
    let mut logits = Vec::new();
    let mut targets = Vec::new();
    for (i, t) in trees.iter().enumerate() {
        let zi = g.gather_rows(z, &[i])?;
        let out = ae.decode_with(g, store, zi, DecodeMode::TeacherForced(t), Some(&mut *rng))?;
        targets.extend(out.steps.iter().map(|s| s.target.expect("teacher forced")));
        logits.extend(out.logits);
    }
    let stacked = g.concat_rows(&logits)?;
    g.cross_entropy(stacked, &targets)
}

/// Trains encoder and decoder with teacher forcing on the topological
/// decisions.
pub fn ae_train(ae: &mut TreeAutoencoder, trees: &[TreeGraph], config: &AeConfig) -> Result<AeReport> {
    if trees.is_empty() || config.batch_size == 0 {
        return Err(Error::Config("autoencoder training needs trees and a positive batch size".into()));
    }
    let mut opt = RiemannianAdam::new(AdamConfig::new(config.lr, config.betas.0, config.betas.1));
    if config.lr_step > 0 {
        opt = opt.with_schedule(StepLr { step_size: config.lr_step, gamma: config.lr_gamma });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(4);
    let mut order: Vec<usize> = (0..trees.len()).collect();
    let mut report = AeReport::default();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&TreeGraph> = chunk.iter().map(|&i| &trees[i]).collect();
            let mut g = Graph::new();
            let mut drop_rng = ChaCha8Rng::seed_from_u64(rng.random());
            let step = report.loss_history.len();
            let loss = match batch_loss(ae, &mut g, &ae.store, &batch, &mut drop_rng) {
                Ok(loss) => loss,
                // Collapsed or overflowed activations end training like a
                // non-finite loss.
                Err(Error::Degenerate(_)) => {
                    report.nan_step = Some(step);
                    return Ok(report);
                }
                Err(e) => return Err(e),
            };
            let value = g.value(loss).item();
            if !value.is_finite() {
                report.nan_step = Some(step);
                return Ok(report);
            }
            g.backward(loss)?;
            ae.store.zero_grad();
            g.accumulate_grads(&mut ae.store);
            if opt.step(&mut ae.store).is_err() {
                report.nan_step = Some(step);
                return Ok(report);
            }
            report.loss_history.push(value);
            epoch_total += value;
            batches += 1;
        }
        report.epoch_loss.push(epoch_total / batches as f64);
    }
    Ok(report)
}

/// Fraction of teacher-forced decisions whose argmax (ties backtrack)
/// matches the ground truth.
pub fn teacher_forced_accuracy(ae: &TreeAutoencoder, trees: &[TreeGraph]) -> Result<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    let z = ae.embed(trees)?;
    for (i, t) in trees.iter().enumerate() {
        let mut g = Graph::new();
        let zi = g.constant(crate::matrix::Matrix::row_vector(z.row(i)));
        let out = ae.decode(&mut g, zi, DecodeMode::TeacherForced(t))?;
        for s in &out.steps {
            let predicted = usize::from(s.probs[1] > s.probs[0]);
            hit += usize::from(Some(predicted) == s.target);
            total += 1;
        }
    }
    Ok(hit as f64 / total as f64)
}

/// Samples `count` trees: wrapped-normal noise, then the generator, then free
/// decoding. Returns the trees and how many were truncated at `max_nodes`.
pub fn haegan_sample<R: Rng + ?Sized>(
    gan: &GanModel,
    ae: &TreeAutoencoder,
    rng: &mut R,
    count: usize,
    max_nodes: usize,
) -> Result<(Vec<TreeGraph>, usize)> {
    let z = gan.generate(rng, count)?;
    let mut trees = Vec::with_capacity(count);
    let mut truncated = 0;
    for r in 0..count {
        let out = ae.decode_point(z.row(r), max_nodes)?;
        truncated += usize::from(out.truncated);
        trees.push(out.tree);
    }
    Ok((trees, truncated))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub train_trees: usize,
    pub test_trees: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Node cap for free decoding.
    pub decode_max_nodes: usize,
    pub samples: usize,
    pub mmd_sigma: f64,
    pub seed: u64,
    pub autoencoder: TreeAutoencoderConfig,
    pub ae: AeConfig,
    pub gan: GanConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            train_trees: 400,
            test_trees: 100,
            min_nodes: 20,
            max_nodes: 50,
            decode_max_nodes: 100,
            samples: 100,
            mmd_sigma: 1.0,
            seed: 0,
            autoencoder: TreeAutoencoderConfig::default(),
            ae: AeConfig::default(),
            gan: GanConfig {
                latent_dim: 16,
                hidden_dim: 32,
                depth_gen: 2,
                depth_critic: 2,
                output_dim: 32,
                lr: 1e-4,
                betas: (0.0, 0.9),
                batch_size: 64,
                epochs: 20,
                dropout: 0.1,
                ..GanConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub train: Vec<TreeGraph>,
    pub test: Vec<TreeGraph>,
    pub ae: AeReport,
    pub gan: TrainReport,
    pub test_accuracy: f64,
    pub samples: Vec<TreeGraph>,
    pub truncated: usize,
    pub metrics: MetricsReport,
    pub autoencoder: TreeAutoencoder,
    pub gan_model: Option<GanModel>,
}

impl PipelineReport {
    pub fn nan_step(&self) -> Option<usize> {
        self.ae.nan_step.or(self.gan.nan_step)
    }
}

/// Dataset generation, autoencoder training, GAN training on the training
/// embeddings, sampling and evaluation against the test set.
///
/// Training stops at the first non-finite step; the report then has no
/// samples and [`PipelineReport::nan_step`] is set.
pub fn haegan_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let all = random_trees(&mut data_rng, config.train_trees + config.test_trees, config.min_nodes, config.max_nodes)?;
    let (train, test) = all.split_at(config.train_trees);
    let (train, test) = (train.to_vec(), test.to_vec());

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_rng.set_stream(5);
    let mut ae = TreeAutoencoder::new(config.autoencoder, &mut init_rng)?;
    let ae_cfg = AeConfig { seed: config.seed, ..config.ae.clone() };
    let ae_report = ae_train(&mut ae, &train, &ae_cfg)?;
    let empty_metrics = MetricsReport::compute(&[], &test, config.mmd_sigma);
    if ae_report.nan_step.is_some() {
        return Ok(PipelineReport {
            train,
            test,
            ae: ae_report,
            gan: TrainReport::default(),
            test_accuracy: f64::NAN,
            samples: Vec::new(),
            truncated: 0,
            metrics: empty_metrics,
            autoencoder: ae,
            gan_model: None,
        });
    }
    let test_accuracy = teacher_forced_accuracy(&ae, &test)?;

    let embeddings = ae.embed(&train)?;
    let gan_cfg = GanConfig {
        output_dim: config.autoencoder.dim,
        curvature: config.autoencoder.curvature,
        batch_size: config.gan.batch_size.min(train.len()),
        seed: config.seed,
        ..config.gan.clone()
    };
    let mut gan = GanModel::new(gan_cfg)?;
    let gan_report = wgan::train(&mut gan, &embeddings, &mut NoCallbacks)?;
    if gan_report.nan_step.is_some() {
        return Ok(PipelineReport {
            train,
            test,
            ae: ae_report,
            gan: gan_report,
            test_accuracy,
            samples: Vec::new(),
            truncated: 0,
            metrics: empty_metrics,
            autoencoder: ae,
            gan_model: Some(gan),
        });
    }

    let mut sample_rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_rng.set_stream(6);
    let (samples, truncated) = haegan_sample(&gan, &ae, &mut sample_rng, config.samples, config.decode_max_nodes)?;
    let metrics = MetricsReport::compute(&samples, &test, config.mmd_sigma);
    Ok(PipelineReport {
        train,
        test,
        ae: ae_report,
        gan: gan_report,
        test_accuracy,
        samples,
        truncated,
        metrics,
        autoencoder: ae,
        gan_model: Some(gan),
    })
}
