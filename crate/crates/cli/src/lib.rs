//! Experiment runner for the hyperbolic toolkit.
//!
//! Every subcommand resolves a configuration (scale preset, optional TOML
//! file, `key=value` overrides, seed), creates a run directory, writes its
//! artifacts there and finally drops a completion marker.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

pub use config::{resolve, RunConfig, Scale};
pub use error::{CliError, Result};
pub use output::RunDir;

use commands::depth::DepthConfig;
use commands::distance::DistanceConfig;
use commands::selftest::SelftestRunConfig;
use commands::surface::SurfaceConfig;
use commands::toy2d::Toy2dConfig;
use haegan::tree::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Randomized geometry and gradient property table.
    ManifoldSelftest,
    /// WGAN on a toy density in the hyperbolic plane.
    Toy2d,
    /// Jacobian grids of both concatenations of two 1-dimensional points.
    ConcatGradSurface,
    /// Per-block gradient norms of deep concatenation stacks.
    ConcatDepth,
    /// Distance deviations caused by concatenation.
    ConcatDistance,
    /// Tree autoencoder, latent GAN, sampling and graph metrics.
    TreeGen,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file overriding the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `KEY=VALUE` override (dotted keys reach nested tables); repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parent directory of the run directory.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Scale::Paper)]
    pub scale: Scale,
}

/// Resolves, runs and completes one command; returns the run directory.
pub fn run_command(command: Command, args: &CommonArgs) -> Result<PathBuf> {
    match command {
        Command::ManifoldSelftest => run::<SelftestRunConfig, _>(args, |c, d| commands::selftest::execute(c, d).map(drop)),
        Command::Toy2d => run::<Toy2dConfig, _>(args, |c, d| commands::toy2d::execute(c, d).map(drop)),
        Command::ConcatGradSurface => run::<SurfaceConfig, _>(args, |c, d| commands::surface::execute(c, d).map(drop)),
        Command::ConcatDepth => run::<DepthConfig, _>(args, |c, d| commands::depth::execute(c, d).map(drop)),
        Command::ConcatDistance => run::<DistanceConfig, _>(args, |c, d| commands::distance::execute(c, d).map(drop)),
        Command::TreeGen => run::<PipelineConfig, _>(args, |c, d| commands::tree_gen::execute(c, d).map(drop)),
    }
}

fn run<C, F>(args: &CommonArgs, body: F) -> Result<PathBuf>
where
    C: RunConfig,
    F: FnOnce(&C, &mut RunDir) -> Result<()>,
{
    let cfg: C = resolve(args.scale, args.config.as_deref(), &args.overrides, args.seed)?;
    let (dir, result) = execute_in(&args.out, &cfg, body)?;
    result.map(|()| dir)
}

/// Creates the run directory for `cfg` under `out` and runs `body` in it.
/// The completion marker is written only if `body` succeeds; the schema is
/// written either way. Errors creating the directory are returned directly.
pub fn execute_in<C, T, F>(out: &Path, cfg: &C, body: F) -> Result<(PathBuf, Result<T>)>
where
    C: RunConfig,
    F: FnOnce(&C, &mut RunDir) -> Result<T>,
{
    let mut dir = RunDir::create(out, cfg)?;
    let result = body(cfg, &mut dir);
    match &result {
        Ok(_) => dir.complete()?,
        Err(_) => dir.abandon()?,
    }
    Ok((dir.path().to_path_buf(), result))
}
