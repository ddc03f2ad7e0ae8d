//! Derivatives of a concatenation of two 1-dimensional points with respect
//! to the first input's spatial coordinate, over a square grid.

use haegan::autodiff::Graph;
use haegan::layers::ops;
use haegan::{Curvature, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ConcatMethod;
use crate::config::{RunConfig, Scale};
use crate::error::{CliError, Result};
use crate::output::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub seed: u64,
    pub curvature: f64,
    /// Grid bounds and points per axis for both spatial coordinates.
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Random higher-dimensional inputs for the direct-concatenation bound.
    pub random_inputs: usize,
}

impl RunConfig for SurfaceConfig {
    const NAME: &'static str = "concat-grad-surface";

    fn preset(scale: Scale) -> Self {
        let (points, random_inputs) = match scale {
            Scale::Paper => (401, 100_000),
            Scale::Ci => (81, 10_000),
        };
        Self { seed: 0, curvature: -1.0, min: -100.0, max: 100.0, points, random_inputs }
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        Curvature::new(self.curvature)?;
        if self.points < 2 || !(self.max > self.min) {
            return Err(CliError::Config("grid needs at least two points and max > min".into()));
        }
        Ok(())
    }
}

/// Output components: time, first spatial, second spatial.
pub const PANELS: [&str; 3] = ["dzt", "dzs0", "dzs1"];

/// `∂z/∂x_s` for `z = concat(lift(x_s), lift(y_s))` at each pair, as three
/// columns (time, first spatial, second spatial).
pub fn pair_jacobian(method: ConcatMethod, xs: &[f64], ys: &[f64], k: Curvature) -> Result<Matrix> {
    let b = xs.len();
    let mut g = Graph::new();
    let x = g.input(Matrix::from_vec(b, 1, xs.to_vec()));
    let y = g.input(Matrix::from_vec(b, 1, ys.to_vec()));
    let px = ops::lift(&mut g, x, k)?;
    let py = ops::lift(&mut g, y, k)?;
    let z = method.apply(&mut g, &[px, py], k)?;
    let dz = g.jvp(x, Matrix::filled(b, 1, 1.0), z)?;
    Ok(g.value(dz).clone())
}

pub fn grid(cfg: &SurfaceConfig) -> Vec<f64> {
    let step = (cfg.max - cfg.min) / (cfg.points - 1) as f64;
    (0..cfg.points).map(|i| cfg.min + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSummary {
    pub method: ConcatMethod,
    pub panel: &'static str,
    pub max_abs: f64,
    /// Value at the grid point closest to `x_s = y_s = 0`.
    pub at_origin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceOutcome {
    pub panels: Vec<PanelSummary>,
    /// Largest Jacobian entry of direct concatenation over random inputs.
    pub direct_random_max: f64,
}

impl SurfaceOutcome {
    pub fn max_abs(&self, method: ConcatMethod) -> f64 {
        self.panels.iter().filter(|p| p.method == method).map(|p| p.max_abs).fold(0.0, f64::max)
    }

    pub fn at_origin(&self, method: ConcatMethod, panel: &str) -> Option<f64> {
        self.panels.iter().find(|p| p.method == method && p.panel == panel).map(|p| p.at_origin)
    }
}

/// Full Jacobians of direct concatenation with respect to every spatial
/// input coordinate, for random part counts, dimensions and scales.
/// Returns the largest absolute entry.
pub fn direct_random_max<R: Rng>(count: usize, rng: &mut R) -> Result<f64> {
    let batch = 1000;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let rows = batch.min(count - done);
        let k = Curvature::new(-rng.random_range(0.1..4.0))?;
        let dims: Vec<usize> = (0..rng.random_range(2..=4)).map(|_| rng.random_range(1..=6)).collect();
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let mut g = Graph::new();
        let inputs: Vec<_> = dims
            .iter()
            .map(|&d| {
                let data = (0..rows * d).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
                g.input(Matrix::from_vec(rows, d, data))
            })
            .collect();
        let points = inputs.iter().map(|&s| ops::lift(&mut g, s, k)).collect::<haegan::Result<Vec<_>>>()?;
        let z = ops::direct_concat(&mut g, &points, k)?;
        for (&input, &d) in inputs.iter().zip(&dims) {
            for j in 0..d {
                let mut seed = Matrix::zeros(rows, d);
                for r in 0..rows {
                    seed.set(r, j, 1.0);
                }
                let dz = g.jvp(input, seed, z)?;
                worst = g.value(dz).data().iter().fold(worst, |m, v| m.max(v.abs()));
            }
        }
        done += rows;
    }
    Ok(worst)
}

/// Writes one grid file per method and output component (rows follow
/// `x_s`, columns follow `y_s`) plus `summary.csv`.
pub fn execute(cfg: &SurfaceConfig, dir: &mut RunDir) -> Result<SurfaceOutcome> {
    let k = Curvature::new(cfg.curvature)?;
    let axis = grid(cfg);
    let n = axis.len();
    let xs: Vec<f64> = axis.iter().flat_map(|&x| std::iter::repeat_n(x, n)).collect();
    let ys: Vec<f64> = (0..n).flat_map(|_| axis.iter().copied()).collect();
    let origin = axis
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .expect("non-empty grid");

    let mut columns = vec!["x_s".to_string()];
    columns.extend(axis.iter().map(|y| format!("y_s={}", crate::output::fmt_f64(*y))));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();

    let mut panels = Vec::new();
    for method in ConcatMethod::BOTH {
        let jac = pair_jacobian(method, &xs, &ys, k)?;
        for (c, panel) in PANELS.iter().enumerate() {
            let mut table = dir.table(&format!("{}_{panel}.csv", method.name()), &columns)?;
            let mut max_abs: f64 = 0.0;
            for (i, &x) in axis.iter().enumerate() {
                let mut row = vec![x.into()];
                for j in 0..n {
                    let v = jac.get(i * n + j, c);
                    max_abs = max_abs.max(v.abs());
                    row.push(v.into());
                }
                table.row(row)?;
            }
            table.finish()?;
            panels.push(PanelSummary { method, panel, max_abs, at_origin: jac.get(origin * n + origin, c) });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let direct_random_max = direct_random_max(cfg.random_inputs, &mut rng)?;

    let mut summary = dir.table("summary.csv", &["method", "panel", "max_abs", "at_origin"])?;
    for p in &panels {
        summary.row(vec![p.method.name().into(), p.panel.into(), p.max_abs.into(), p.at_origin.into()])?;
    }
    summary.row(vec!["direct".into(), "random_inputs".into(), direct_random_max.into(), f64::NAN.into()])?;
    summary.finish()?;
    Ok(SurfaceOutcome { panels, direct_random_max })
}
