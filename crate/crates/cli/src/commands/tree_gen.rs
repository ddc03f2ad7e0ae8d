use std::fs::File;
use std::io::BufWriter;

use haegan::layers::save_weights;
use haegan::metrics::degree_mmd;
use haegan::tree::{haegan_pipeline, write_trees, AeConfig, PipelineConfig, PipelineReport, TreeGraph};
use haegan::wgan::GanConfig;

use crate::config::{RunConfig, Scale};
use crate::error::{CliError, Result};
use crate::output::RunDir;

impl RunConfig for PipelineConfig {
    const NAME: &'static str = "tree-gen";

    fn preset(scale: Scale) -> Self {
        let paper = PipelineConfig::default();
        match scale {
            Scale::Paper => paper,
            Scale::Ci => PipelineConfig {
                train_trees: 100,
                test_trees: 100,
                ae: AeConfig { epochs: 100, batch_size: 8, lr: 2e-2, ..paper.ae.clone() },
                gan: GanConfig { epochs: 200, ..paper.gan.clone() },
                ..paper
            },
        }
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        if self.train_trees == 0 || self.test_trees == 0 || self.samples == 0 {
            return Err(CliError::Config("tree counts and sample count must be positive".into()));
        }
        if self.min_nodes == 0 || self.min_nodes > self.max_nodes {
            return Err(CliError::Config(format!("invalid node range [{}, {}]", self.min_nodes, self.max_nodes)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TreeGenOutcome {
    pub report: PipelineReport,
    /// Degree MMD of the test set against itself.
    pub test_self_mmd: f64,
    pub valid_samples: usize,
}

fn save_trees(dir: &mut RunDir, name: &str, trees: &[TreeGraph]) -> Result<()> {
    write_trees(trees, BufWriter::new(File::create(dir.file(name))?))?;
    dir.describe(name, "one tree per line: node count, then the parents of nodes 1..n");
    Ok(())
}

/// Runs the tree pipeline and writes datasets, samples, loss histories,
/// weights and the metrics table.
pub fn execute(cfg: &PipelineConfig, dir: &mut RunDir) -> Result<TreeGenOutcome> {
    let report = haegan_pipeline(cfg)?;
    save_trees(dir, "train_trees.txt", &report.train)?;
    save_trees(dir, "test_trees.txt", &report.test)?;
    save_trees(dir, "samples.txt", &report.samples)?;

    let mut ae_loss = dir.table("ae_loss.csv", &["step", "loss"])?;
    for (step, &l) in report.ae.loss_history.iter().enumerate() {
        ae_loss.row(vec![step.into(), l.into()])?;
    }
    ae_loss.finish()?;
    let mut gan_loss = dir.table("gan_loss.csv", &["step", "epoch", "critic_loss", "penalty", "wasserstein", "generator_loss"])?;
    for r in &report.gan.history {
        gan_loss.row(vec![
            r.step.into(),
            r.epoch.into(),
            r.critic_loss.into(),
            r.penalty.into(),
            r.wasserstein.into(),
            r.generator_loss.into(),
        ])?;
    }
    gan_loss.finish()?;

    save_weights(&report.autoencoder.store, &dir.file("autoencoder.weights"))?;
    dir.describe("autoencoder.weights", "encoder and decoder parameters");
    if let Some(gan) = &report.gan_model {
        save_weights(&gan.gen_store, &dir.file("generator.weights"))?;
        dir.describe("generator.weights", "latent generator parameters");
    }

    let test_self_mmd = degree_mmd(&report.test, &report.test, cfg.mmd_sigma);
    let valid_samples = report.samples.iter().filter(|t| t.is_valid()).count();
    let m = &report.metrics;
    let mut metrics = dir.table("metrics.csv", &["metric", "value"])?;
    let rows: [(&str, f64); 8] = [
        ("degree_mmd", m.degree_mmd),
        ("betweenness_avg_diff", m.betweenness_avg_diff),
        ("closeness_avg_diff", m.closeness_avg_diff),
        ("test_self_degree_mmd", test_self_mmd),
        ("teacher_forced_accuracy", report.test_accuracy),
        ("samples", report.samples.len() as f64),
        ("valid_samples", valid_samples as f64),
        ("truncated_samples", report.truncated as f64),
    ];
    for (name, v) in rows {
        metrics.row(vec![name.into(), v.into()])?;
    }
    metrics.finish()?;

    if let Some(step) = report.nan_step() {
        let what = if report.ae.nan_step.is_some() { "autoencoder training" } else { "latent GAN training" };
        return Err(CliError::Numerical { what: what.into(), step });
    }
    Ok(TreeGenOutcome { report, test_self_mmd, valid_samples })
}
