//! How much concatenating the same point to two inputs changes their
//! distance: `|d(cat(x,c), cat(y,c)) - d(x,y)|` for both concatenations.

use haegan::layers::WrappedNormal;
use haegan::lorentz::{distance as geodesic, LorentzPoint};
use haegan::Curvature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ConcatMethod;
use crate::config::{RunConfig, Scale};
use crate::error::{CliError, Result};
use crate::output::RunDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Spatial components standard normal, time component lifted.
    SpatialNormal,
    /// Standard wrapped normal at the origin.
    WrappedNormal,
}

impl Scenario {
    pub const BOTH: [Scenario; 2] = [Scenario::SpatialNormal, Scenario::WrappedNormal];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SpatialNormal => "spatial_normal",
            Scenario::WrappedNormal => "wrapped_normal",
        }
    }

    fn sample<R: Rng>(self, rng: &mut R, n: usize, k: Curvature) -> LorentzPoint {
        match self {
            Scenario::SpatialNormal => {
                let s: Vec<f64> = (0..n).map(|_| Distribution::<f64>::sample(&StandardNormal, rng)).collect();
                LorentzPoint::from_spatial(&s, k)
            }
            Scenario::WrappedNormal => WrappedNormal::standard(LorentzPoint::origin(n, k)).sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub seed: u64,
    pub curvature: f64,
    pub dims: Vec<usize>,
    pub trials: usize,
}

impl RunConfig for DistanceConfig {
    const NAME: &'static str = "concat-distance";

    fn preset(scale: Scale) -> Self {
        let dims = match scale {
            Scale::Paper => vec![3, 16, 64],
            Scale::Ci => vec![16, 64],
        };
        Self { seed: 0, curvature: -1.0, dims, trials: 10_000 }
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        Curvature::new(self.curvature)?;
        if self.trials == 0 || self.dims.contains(&0) {
            return Err(CliError::Config("trials and dims must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSet {
    pub scenario: Scenario,
    pub dim: usize,
    pub direct: Vec<f64>,
    pub tangent: Vec<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl DeviationSet {
    pub fn median(&self, method: ConcatMethod) -> f64 {
        median(match method {
            ConcatMethod::Direct => &self.direct,
            ConcatMethod::Tangent => &self.tangent,
        })
    }
}

/// Samples `trials` triples `(x, y, c)` and returns the paired deviations.
pub fn deviations(scenario: Scenario, dim: usize, trials: usize, k: Curvature, seed: u64) -> Result<DeviationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(dim as u64 * 2 + scenario as u64);
    let mut set = DeviationSet { scenario, dim, direct: Vec::with_capacity(trials), tangent: Vec::with_capacity(trials) };
    for _ in 0..trials {
        let x = scenario.sample(&mut rng, dim, k);
        let y = scenario.sample(&mut rng, dim, k);
        let c = scenario.sample(&mut rng, dim, k);
        let base = geodesic(&x, &y)?;
        for method in ConcatMethod::BOTH {
            let xc = method.apply_points(&[x.clone(), c.clone()])?;
            let yc = method.apply_points(&[y.clone(), c.clone()])?;
            let dev = (geodesic(&xc, &yc)? - base).abs();
            match method {
                ConcatMethod::Direct => set.direct.push(dev),
                ConcatMethod::Tangent => set.tangent.push(dev),
            }
        }
    }
    Ok(set)
}

/// Writes every paired deviation per scenario and dimension, plus medians.
pub fn execute(cfg: &DistanceConfig, dir: &mut RunDir) -> Result<Vec<DeviationSet>> {
    let k = Curvature::new(cfg.curvature)?;
    let mut out = Vec::new();
    let mut summary = dir.table("summary.csv", &["scenario", "dim", "trials", "median_direct", "median_tangent"])?;
    for scenario in Scenario::BOTH {
        for &dim in &cfg.dims {
            let set = deviations(scenario, dim, cfg.trials, k, cfg.seed)?;
            let mut t = dir.table(&format!("deviations-{}-n{dim}.csv", scenario.name()), &["direct", "tangent"])?;
            for (&a, &b) in set.direct.iter().zip(&set.tangent) {
                t.row(vec![a.into(), b.into()])?;
            }
            t.finish()?;
            summary.row(vec![
                scenario.name().into(),
                dim.into(),
                cfg.trials.into(),
                set.median(ConcatMethod::Direct).into(),
                set.median(ConcatMethod::Tangent).into(),
            ])?;
            out.push(set);
        }
    }
    summary.finish()?;
    Ok(out)
}
