use haegan::layers::save_weights;
use haegan::toy::{tangent_coordinates, toy_dataset, ToyData, ToyDensity};
use haegan::wgan::{energy_distance, train, GanCallbacks, GanConfig, GanModel};
use haegan::{Curvature, Matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Scale};
use crate::error::{CliError, Result};
use crate::output::{RunDir, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toy2dConfig {
    pub seed: u64,
    pub density: ToyDensity,
    pub train_points: usize,
    /// Size of both the held-out set and the generated set used for the
    /// energy distance.
    pub eval_points: usize,
    /// Model and training settings; `gan.seed` is replaced by `seed`.
    pub gan: GanConfig,
}

impl RunConfig for Toy2dConfig {
    const NAME: &'static str = "toy2d";

    fn preset(_scale: Scale) -> Self {
        // The toy run is already small; both scales train the full model.
        Self {
            seed: 0,
            density: ToyDensity::Checkerboard,
            train_points: 5000,
            eval_points: 2048,
            gan: GanConfig::default(),
        }
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        self.gan.validate()?;
        if self.eval_points == 0 || self.train_points < self.gan.batch_size {
            return Err(CliError::Config("toy2d needs eval points and at least one full batch".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyOutcome {
    /// `(epoch, energy distance)`, epoch 0 being the untrained generator.
    pub energy: Vec<(usize, f64)>,
    pub steps: usize,
    pub nan_step: Option<usize>,
}

impl ToyOutcome {
    pub fn energy_at(&self, epoch: usize) -> Option<f64> {
        self.energy.iter().find(|(e, _)| *e == epoch).map(|(_, v)| *v)
    }
}

struct EpochLog<'a> {
    dir: &'a RunDir,
    stats: Table,
    held_out: &'a Matrix,
    k: Curvature,
    eval_points: usize,
    eval_seed: u64,
    energy: Vec<(usize, f64)>,
}

impl EpochLog<'_> {
    /// Generated points for evaluation; the same noise every epoch.
    fn samples(&self, model: &GanModel) -> haegan::Result<Matrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.eval_seed);
        model.generate(&mut rng, self.eval_points)
    }

    fn record(&mut self, epoch: usize, model: &GanModel) -> haegan::Result<()> {
        let ed = energy_distance(&self.samples(model)?, self.held_out, self.k);
        self.energy.push((epoch, ed));
        self.stats.row(vec![epoch.into(), ed.into()]).map_err(to_core)?;
        Ok(())
    }
}

fn to_core(e: CliError) -> haegan::Error {
    match e {
        CliError::Io(io) => haegan::Error::Io(io),
        other => haegan::Error::Format(other.to_string()),
    }
}

impl GanCallbacks for EpochLog<'_> {
    fn on_epoch_end(&mut self, epoch: usize, model: &GanModel) -> haegan::Result<()> {
        self.record(epoch, model)?;
        save_weights(&model.gen_store, &self.dir.file("generator.weights"))?;
        save_weights(&model.critic_store, &self.dir.file("critic.weights"))?;
        Ok(())
    }
}

fn write_points(dir: &mut RunDir, name: &str, points: &Matrix, k: Curvature) -> Result<()> {
    let mut t = dir.table(name, &["x", "y"])?;
    for [x, y] in tangent_coordinates(points, k) {
        t.row(vec![x.into(), y.into()])?;
    }
    t.finish()
}

/// Trains the toy GAN, logging the energy distance after every epoch,
/// tangent-space coordinates of held-out and generated points, the loss
/// history and the latest weights.
pub fn execute(cfg: &Toy2dConfig, dir: &mut RunDir) -> Result<ToyOutcome> {
    let gan_cfg = GanConfig { seed: cfg.seed, ..cfg.gan.clone() };
    let k = gan_cfg.validate()?;
    let mut data_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ToyData { train: train_set, held_out } = toy_dataset(cfg.density, cfg.train_points, cfg.eval_points, k, &mut data_rng)?;
    write_points(dir, "held_out.csv", &held_out, k)?;

    let mut model = GanModel::new(gan_cfg)?;
    let stats = dir.table("energy.csv", &["epoch", "energy_distance"])?;
    dir.describe("generator.weights", "generator parameters after the latest epoch");
    dir.describe("critic.weights", "critic parameters after the latest epoch");
    let mut log = EpochLog {
        dir,
        stats,
        held_out: &held_out,
        k,
        eval_points: cfg.eval_points,
        eval_seed: cfg.seed ^ 0x5eed_0e7a,
        energy: Vec::new(),
    };
    // Overflowing activations surface as degenerate layer inputs; during
    // training they count as a numerical abort.
    let abort = |e: haegan::Error, step: usize| match e {
        haegan::Error::Degenerate(_) => CliError::Numerical { what: "toy2d training".into(), step },
        other => other.into(),
    };
    log.record(0, &model).map_err(|e| abort(e, 0))?;
    let report = train(&mut model, &train_set, &mut log).map_err(|e| abort(e, 0))?;
    let samples = match report.nan_step {
        Some(_) => Matrix::zeros(0, 3),
        None => log.samples(&model).map_err(|e| abort(e, report.history.len()))?,
    };
    let EpochLog { stats, energy, .. } = log;
    stats.finish()?;

    let mut losses = dir.table("losses.csv", &["step", "epoch", "critic_loss", "penalty", "wasserstein", "generator_loss"])?;
    for r in &report.history {
        losses.row(vec![
            r.step.into(),
            r.epoch.into(),
            r.critic_loss.into(),
            r.penalty.into(),
            r.wasserstein.into(),
            r.generator_loss.into(),
        ])?;
    }
    losses.finish()?;
    write_points(dir, "samples.csv", &samples, k)?;

    let outcome = ToyOutcome { energy, steps: report.history.len(), nan_step: report.nan_step };
    if let Some(step) = report.nan_step {
        return Err(CliError::Numerical { what: "toy2d training".into(), step });
    }
    Ok(outcome)
}
