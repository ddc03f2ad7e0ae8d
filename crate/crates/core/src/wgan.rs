//! Wasserstein GAN with gradient penalty on the hyperboloid.
//!
//! The generator is a stack of [`HLinear`] layers fed with wrapped-normal
//! noise; the critic is a stack of [`HLinear`] layers followed by an
//! [`HCDist`] head with a single centroid. The penalty is evaluated at points
//! drawn uniformly along the geodesic between paired fake and real samples,
//! and penalizes the deviation of the Lorentz norm of the critic's Riemannian
//! gradient from 1.
//!
//! The input gradient of the critic is assembled from forward-mode
//! derivatives ([`Graph::jvp`]), one pass per ambient coordinate, so the
//! penalty remains an ordinary graph node that the backward sweep can
//! differentiate with respect to the critic parameters. Interpolated points
//! are constants: no gradient reaches the generator through the penalty.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::layers::{reborrow, HCDist, HLinear, HLinearConfig, WrappedNormal};
use crate::lorentz::{self, Curvature, LorentzPoint};
use crate::matrix::Matrix;
use crate::optim::{AdamConfig, RiemannianAdam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub hidden_dim: usize,
    pub depth_gen: usize,
    pub depth_critic: usize,
    pub output_dim: usize,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub lr: f64,
    pub betas: (f64, f64),
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub dropout: f64,
    pub curvature: f64,
    /// Initial range scale of every hyperbolic linear layer.
    pub init_range: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            latent_dim: 256,
            hidden_dim: 128,
            depth_gen: 3,
            depth_critic: 3,
            output_dim: 2,
            lambda_gp: 10.0,
            n_critic: 5,
            lr: 1e-4,
            betas: (0.0, 0.9),
            batch_size: 128,
            epochs: 20,
            seed: 0,
            dropout: 0.0,
            curvature: -1.0,
            init_range: 1.0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<Curvature> {
        let dims = [self.latent_dim, self.hidden_dim, self.depth_gen, self.depth_critic, self.output_dim];
        if dims.contains(&0) || self.n_critic == 0 || self.batch_size == 0 {
            return Err(Error::Config("dimensions, depths, n_critic and batch size must be at least 1".into()));
        }
        if !(self.lambda_gp >= 0.0) {
            return Err(Error::Config("gradient penalty weight must be non-negative".into()));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.betas.0) || !(0.0..1.0).contains(&self.betas.1) {
            return Err(Error::Config("learning rate must be positive and betas in [0, 1)".into()));
        }
        if !(self.init_range > 0.0) {
            return Err(Error::Config("initial range scale must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must be in [0, 1)".into()));
        }
        Ok(Curvature::new(self.curvature)?)
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub layers: Vec<HLinear>,
}

impl Generator {
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        z: Tensor,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<Tensor> {
        let mut h = z;
        for layer in &self.layers {
            h = layer.forward(g, store, h, reborrow(&mut rng))?;
        }
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct Critic {
    pub layers: Vec<HLinear>,
    pub head: HCDist,
}

impl Critic {
    /// `B × (n+1)` points to `B × 1` scores.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: Tensor,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<Tensor> {
        let mut h = x;
        for layer in &self.layers {
            h = layer.forward(g, store, h, reborrow(&mut rng))?;
        }
        self.head.forward(g, store, h)
    }
}

#[derive(Debug, Clone)]
pub struct GanModel {
    pub config: GanConfig,
    pub curvature: Curvature,
    pub gen_store: ParamStore,
    pub generator: Generator,
    pub critic_store: ParamStore,
    pub critic: Critic,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl GanModel {
    /// Builds generator and critic from `config.seed`.
    pub fn new(config: GanConfig) -> Result<Self> {
        let k = config.validate()?;
        let mut rng = stream(config.seed, 1);
        let layer_cfg = HLinearConfig { bias: true, dropout: config.dropout, curvature: k, init_range: config.init_range, ..Default::default() };

        let mut gen_store = ParamStore::new();
        let mut dims = vec![config.latent_dim];
        dims.extend(std::iter::repeat_n(config.hidden_dim, config.depth_gen - 1));
        dims.push(config.output_dim);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| HLinear::new(&mut gen_store, &format!("gen.{i}"), w[0], w[1], layer_cfg, &mut rng))
            .collect();
        let generator = Generator { layers };

        let mut critic_store = ParamStore::new();
        let mut dims = vec![config.output_dim];
        dims.extend(std::iter::repeat_n(config.hidden_dim, config.depth_critic));
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| HLinear::new(&mut critic_store, &format!("critic.{i}"), w[0], w[1], layer_cfg, &mut rng))
            .collect();
        let head = HCDist::new(&mut critic_store, "critic.head", config.hidden_dim, 1, k, &mut rng);
        let critic = Critic { layers, head };
        Ok(Self { config, curvature: k, gen_store, generator, critic_store, critic })
    }

    /// Generates `count` points with dropout disabled.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Matrix> {
        let z = sample_noise(count, self.config.latent_dim, self.curvature, rng);
        let mut g = Graph::new();
        let zt = g.constant(z);
        let out = self.generator.forward(&mut g, &self.gen_store, zt, None)?;
        Ok(g.value(out).clone())
    }

    /// Critic scores with dropout disabled.
    pub fn score(&self, points: &Matrix) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let x = g.constant(points.clone());
        let d = self.critic.forward(&mut g, &self.critic_store, x, None)?;
        Ok(g.value(d).data().to_vec())
    }
}

/// Wrapped-normal noise at the origin with identity covariance, one point per
/// row.
pub fn sample_noise<R: Rng + ?Sized>(batch: usize, latent_dim: usize, k: Curvature, rng: &mut R) -> Matrix {
    WrappedNormal::standard(LorentzPoint::origin(latent_dim, k)).sample_batch(rng, batch)
}

fn row_point(m: &Matrix, r: usize, k: Curvature) -> LorentzPoint {
    LorentzPoint::from_spatial(&m.row(r)[1..], k)
}

/// Row `i` is `geodesic_point(fake_i, real_i, t_i)` with `t_i ~ U[0, 1]`.
pub fn geodesic_interpolates<R: Rng + ?Sized>(
    real: &Matrix,
    fake: &Matrix,
    k: Curvature,
    rng: &mut R,
) -> Result<Matrix> {
    if real.shape() != fake.shape() {
        return Err(Error::Shape { op: "geodesic_interpolates", left: real.shape(), right: fake.shape() });
    }
    let mut out = Matrix::zeros(real.rows(), real.cols());
    for r in 0..real.rows() {
        let t: f64 = rng.random();
        let p = lorentz::geodesic_point(&row_point(fake, r, k), &row_point(real, r, k), t)?;
        out.row_mut(r).copy_from_slice(p.coords());
    }
    Ok(out)
}

/// `mean((|grad_R D(x)|_L - 1)^2)` over the rows of `points`.
pub fn gradient_penalty_at<F>(g: &mut Graph, mut critic: F, points: &Matrix, k: Curvature) -> Result<Tensor>
where
    F: FnMut(&mut Graph, Tensor) -> Result<Tensor>,
{
    let x = g.constant(points.clone());
    let d = critic(g, x)?;
    if g.shape(d) != (points.rows(), 1) {
        return Err(Error::Shape { op: "gradient_penalty", left: g.shape(d), right: (points.rows(), 1) });
    }
    let cols = points.cols();
    let mut columns = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut seed = Matrix::zeros(points.rows(), cols);
        for r in 0..points.rows() {
            seed.set(r, c, 1.0);
        }
        columns.push(g.jvp(x, seed, d)?);
    }
    let euclid = g.concat_cols(&columns)?;
    let rg = g.riemannian_grad(x, euclid, k)?;
    let norm = g.lorentz_norm(rg)?;
    let dev = g.add_const(norm, -1.0);
    let sq = g.square(dev);
    Ok(g.mean(sq))
}

/// Penalty at geodesic interpolates between `fake` and `real`.
pub fn gradient_penalty<F, R>(g: &mut Graph, critic: F, real: &Matrix, fake: &Matrix, k: Curvature, rng: &mut R) -> Result<Tensor>
where
    F: FnMut(&mut Graph, Tensor) -> Result<Tensor>,
    R: Rng + ?Sized,
{
    let x_hat = geodesic_interpolates(real, fake, k, rng)?;
    gradient_penalty_at(g, critic, &x_hat, k)
}

/// Scalar pieces of the critic objective.
#[derive(Debug, Clone, Copy)]
pub struct CriticLoss {
    pub total: Tensor,
    pub penalty: Tensor,
    /// `mean D(real) - mean D(fake)`.
    pub wasserstein: f64,
}

/// `mean D(fake) - mean D(real) + λ · penalty`.
pub fn critic_loss<F, R>(
    g: &mut Graph,
    mut critic: F,
    real: &Matrix,
    fake: &Matrix,
    lambda_gp: f64,
    k: Curvature,
    rng: &mut R,
) -> Result<CriticLoss>
where
    F: FnMut(&mut Graph, Tensor) -> Result<Tensor>,
    R: Rng + ?Sized,
{
    let rt = g.constant(real.clone());
    let ft = g.constant(fake.clone());
    let dr = critic(g, rt)?;
    let df = critic(g, ft)?;
    let mr = g.mean(dr);
    let mf = g.mean(df);
    let w = g.sub(mf, mr)?;
    let penalty = gradient_penalty(g, &mut critic, real, fake, k, rng)?;
    let scaled = g.scale(penalty, lambda_gp);
    let total = g.add(w, scaled)?;
    let wasserstein = -g.value(w).item();
    Ok(CriticLoss { total, penalty, wasserstein })
}

/// `-mean D(fake)`.
pub fn generator_loss<F>(g: &mut Graph, mut critic: F, fake: Tensor) -> Result<Tensor>
where
    F: FnMut(&mut Graph, Tensor) -> Result<Tensor>,
{
    let d = critic(g, fake)?;
    let m = g.mean(d);
    Ok(g.neg(m))
}

#[derive(Debug, Clone, PartialEq)]
/// One training step: `n_critic` critic updates followed by one generator
/// update. The critic fields describe the last critic update.
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub critic_loss: f64,
    pub penalty: f64,
    pub wasserstein: f64,
    pub generator_loss: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub history: Vec<StepRecord>,
    pub steps_per_epoch: usize,
    /// Step at which a non-finite loss or gradient stopped training.
    pub nan_step: Option<usize>,
}

/// Hooks run by [`train`].
pub trait GanCallbacks {
    /// Called after every completed epoch (1-based).
    fn on_epoch_end(&mut self, _epoch: usize, _model: &GanModel) -> Result<()> {
        Ok(())
    }
}

pub struct NoCallbacks;

impl GanCallbacks for NoCallbacks {}

/// Unwraps a forward pass; a degenerate intermediate (overflowed or
/// collapsed activations) ends training like a non-finite loss.
macro_rules! forward_or_abort {
    ($expr:expr, $report:ident, $step:expr) => {
        match $expr {
            Ok(v) => v,
            Err(Error::Degenerate(_)) => {
                $report.nan_step = Some($step);
                return Ok($report);
            }
            Err(e) => return Err(e),
        }
    };
}

/// Trains on the rows of `data` (points on the hyperboloid).
///
/// Each step draws one shuffled batch of real points, updates the critic
/// `n_critic` times against fresh generator samples and then updates the
/// generator once. An epoch is `floor(N / batch_size)` steps. A non-finite loss or gradient ends training
/// with [`TrainReport::nan_step`] set.
pub fn train(model: &mut GanModel, data: &Matrix, callbacks: &mut dyn GanCallbacks) -> Result<TrainReport> {
    let cfg = model.config.clone();
    let k = model.curvature;
    if data.cols() != cfg.output_dim + 1 {
        return Err(Error::Shape { op: "train", left: data.shape(), right: (0, cfg.output_dim + 1) });
    }
    let steps_per_epoch = data.rows() / cfg.batch_size;
    if steps_per_epoch == 0 {
        return Err(Error::Config(format!("{} training points cannot fill a batch of {}", data.rows(), cfg.batch_size)));
    }
    let adam = AdamConfig::new(cfg.lr, cfg.betas.0, cfg.betas.1);
    let mut critic_opt = RiemannianAdam::new(adam);
    let mut gen_opt = RiemannianAdam::new(adam);
    let mut rng = stream(cfg.seed, 2);
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut report = TrainReport { steps_per_epoch, ..Default::default() };
    let mut step = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for b in 0..steps_per_epoch {
            let idx = &order[b * cfg.batch_size..(b + 1) * cfg.batch_size];
            let mut real = Matrix::zeros(cfg.batch_size, data.cols());
            for (r, &i) in idx.iter().enumerate() {
                real.row_mut(r).copy_from_slice(data.row(i));
            }

            // n_critic critic updates on detached generator samples.
            let mut last = (0.0, 0.0, 0.0);
            for _ in 0..cfg.n_critic {
                let z = sample_noise(cfg.batch_size, cfg.latent_dim, k, &mut rng);
                let fake = {
                    let mut g = Graph::new();
                    let zt = g.constant(z);
                    let out = forward_or_abort!(model.generator.forward(&mut g, &model.gen_store, zt, Some(&mut rng)), report, step);
                    g.value(out).clone()
                };
                let mut g = Graph::new();
                let mut drop_rng = stream(rng.next_u64(), 3);
                let critic = &model.critic;
                let cstore = &model.critic_store;
                let loss = forward_or_abort!(critic_loss(
                    &mut g,
                    |g: &mut Graph, x: Tensor| critic.forward(g, cstore, x, Some(&mut drop_rng)),
                    &real,
                    &fake,
                    cfg.lambda_gp,
                    k,
                    &mut rng,
                ), report, step);
                let value = g.value(loss.total).item();
                if !value.is_finite() {
                    report.nan_step = Some(step);
                    return Ok(report);
                }
                last = (value, g.value(loss.penalty).item(), loss.wasserstein);
                g.backward(loss.total)?;
                model.critic_store.zero_grad();
                g.accumulate_grads(&mut model.critic_store);
                if critic_opt.step(&mut model.critic_store).is_err() {
                    report.nan_step = Some(step);
                    return Ok(report);
                }
            }

            let z = sample_noise(cfg.batch_size, cfg.latent_dim, k, &mut rng);
            let mut g = Graph::new();
            let zt = g.constant(z);
            let fake = forward_or_abort!(model.generator.forward(&mut g, &model.gen_store, zt, Some(&mut rng)), report, step);
            let mut drop_rng = stream(rng.next_u64(), 3);
            let critic = &model.critic;
            let cstore = &model.critic_store;
            let gl = forward_or_abort!(
                generator_loss(&mut g, |g: &mut Graph, x: Tensor| critic.forward(g, cstore, x, Some(&mut drop_rng)), fake),
                report,
                step
            );
            let generator_value = g.value(gl).item();
            if !generator_value.is_finite() {
                report.nan_step = Some(step);
                return Ok(report);
            }
            g.backward(gl)?;
            model.gen_store.zero_grad();
            g.accumulate_grads(&mut model.gen_store);
            if gen_opt.step(&mut model.gen_store).is_err() {
                report.nan_step = Some(step);
                return Ok(report);
            }

            report.history.push(StepRecord {
                step,
                epoch,
                critic_loss: last.0,
                penalty: last.1,
                wasserstein: last.2,
                generator_loss: generator_value,
            });
            step += 1;
        }
        callbacks.on_epoch_end(epoch, model)?;
    }
    Ok(report)
}

/// Energy distance `2E d(X,Y) - E d(X,X') - E d(Y,Y')` between two sets of
/// points under the geodesic distance (V-statistics over all pairs).
pub fn energy_distance(a: &Matrix, b: &Matrix, k: Curvature) -> f64 {
    let mean_pair = |x: &Matrix, y: &Matrix| -> f64 {
        let mut total = 0.0;
        for i in 0..x.rows() {
            let mut row = 0.0;
            for j in 0..y.rows() {
                row += lorentz::distance_unchecked(x.row(i), y.row(j), k);
            }
            total += row;
        }
        total / (x.rows() * y.rows()) as f64
    };
    2.0 * mean_pair(a, b) - mean_pair(a, a) - mean_pair(b, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> GanConfig {
        GanConfig {
            latent_dim: 4,
            hidden_dim: 6,
            depth_gen: 2,
            depth_critic: 2,
            output_dim: 2,
            batch_size: 16,
            epochs: 1,
            ..GanConfig::default()
        }
    }

    #[test]
    fn constant_critic_has_unit_penalty() {
        let k = Curvature::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_noise(8, 3, k, &mut rng);
        let mut g = Graph::new();
        let p = gradient_penalty_at(
            &mut g,
            |g: &mut Graph, x: Tensor| {
                let z = g.scale(x, 0.0);
                let s = g.row_sum(z);
                Ok(g.add_const(s, 2.5))
            },
            &pts,
            k,
        )
        .unwrap();
        assert_eq!(g.value(p).item(), 1.0);
    }

    #[test]
    fn loss_history_covers_every_step() {
        let mut model = GanModel::new(small_config()).unwrap();
        let k = model.curvature;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = WrappedNormal::isotropic(LorentzPoint::origin(2, k), 0.01).unwrap().sample_batch(&mut rng, 128);
        let report = train(&mut model, &data, &mut NoCallbacks).unwrap();
        assert_eq!(report.nan_step, None);
        assert_eq!(report.history.len(), 8);
    }
}
