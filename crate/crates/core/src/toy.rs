//! Toy 2D densities mapped onto the hyperbolic plane.
//!
//! Points are drawn in the plane, each axis is min-max scaled to `[-1, 1]`
//! and the result is mapped with `e2h`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz::{self, Curvature};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyDensity {
    Checkerboard,
    #[serde(rename = "8gaussians")]
    EightGaussians,
    Moons,
}

impl ToyDensity {
    pub const ALL: [ToyDensity; 3] = [ToyDensity::Checkerboard, ToyDensity::EightGaussians, ToyDensity::Moons];

    pub fn name(self) -> &'static str {
        match self {
            ToyDensity::Checkerboard => "checkerboard",
            ToyDensity::EightGaussians => "8gaussians",
            ToyDensity::Moons => "moons",
        }
    }

    /// One unscaled sample in the plane.
    pub fn sample_plane<R: Rng + ?Sized>(self, rng: &mut R) -> [f64; 2] {
        match self {
            ToyDensity::Checkerboard => {
                let x1: f64 = rng.random::<f64>() * 4.0 - 2.0;
                let shift = if rng.random::<bool>() { 2.0 } else { 0.0 };
                let x2 = rng.random::<f64>() - shift + (x1.floor().rem_euclid(2.0));
                [2.0 * x1, 2.0 * x2]
            }
            ToyDensity::EightGaussians => {
                let scale = 4.0;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let centers = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (h, h), (h, -h), (-h, h), (-h, -h)];
                let (cx, cy) = centers[rng.random_range(0..8)];
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                [(scale * cx + 0.5 * nx) / 1.414, (scale * cy + 0.5 * ny) / 1.414]
            }
            ToyDensity::Moons => {
                let t = std::f64::consts::PI * rng.random::<f64>();
                let (x, y) = if rng.random::<bool>() { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                [2.0 * (x + 0.1 * nx) - 1.0, 2.0 * (y + 0.1 * ny) - 0.2]
            }
        }
    }
}

impl fmt::Display for ToyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ToyDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ToyDensity::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown toy density {s:?}; expected checkerboard, 8gaussians or moons")))
    }
}

/// Training and held-out sets on the hyperboloid.
#[derive(Debug, Clone)]
pub struct ToyData {
    pub train: Matrix,
    pub held_out: Matrix,
}

/// Samples `train + held_out` planar points, scales each axis to `[-1, 1]`
/// using the range over all of them, and maps every point with `e2h`.
pub fn toy_dataset<R: Rng + ?Sized>(
    density: ToyDensity,
    train: usize,
    held_out: usize,
    k: Curvature,
    rng: &mut R,
) -> Result<ToyData> {
    let total = train + held_out;
    if total < 2 {
        return Err(Error::Config("toy dataset needs at least two points".into()));
    }
    let pts: Vec<[f64; 2]> = (0..total).map(|_| density.sample_plane(rng)).collect();
    let scaled = scale_to_unit_box(&pts);
    let mut out = Matrix::zeros(total, 3);
    for (r, p) in scaled.iter().enumerate() {
        out.row_mut(r).copy_from_slice(lorentz::e2h(p, k).coords());
    }
    let (a, b) = out.data().split_at(train * 3);
    Ok(ToyData { train: Matrix::from_vec(train, 3, a.to_vec()), held_out: Matrix::from_vec(held_out, 3, b.to_vec()) })
}

/// Affine per-axis map of the points onto `[-1, 1]`.
pub fn scale_to_unit_box(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    pts.iter()
        .map(|p| {
            let mut q = [0.0; 2];
            for a in 0..2 {
                let span = hi[a] - lo[a];
                q[a] = if span > 0.0 { 2.0 * (p[a] - lo[a]) / span - 1.0 } else { 0.0 };
            }
            q
        })
        .collect()
}

/// Spatial part of `log_o` for each row: the planar coordinates used for
/// plotting.
pub fn tangent_coordinates(points: &Matrix, k: Curvature) -> Vec<[f64; 2]> {
    (0..points.rows())
        .map(|r| {
            let p = lorentz::LorentzPoint::from_spatial(&points.row(r)[1..], k);
            let v = lorentz::log_map(&lorentz::LorentzPoint::origin(p.dim(), k), &p)
                .map(|v| v.into_components())
                .unwrap_or_else(|_| vec![0.0; p.dim() + 1]);
            [v[1], v.get(2).copied().unwrap_or(0.0)]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scaled_coordinates_span_unit_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in ToyDensity::ALL {
            let pts: Vec<_> = (0..500).map(|_| d.sample_plane(&mut rng)).collect();
            let s = scale_to_unit_box(&pts);
            for a in 0..2 {
                let lo = s.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
                let hi = s.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
                assert_eq!((lo, hi), (-1.0, 1.0), "{d}");
            }
        }
    }

    #[test]
    fn tangent_coordinates_invert_e2h() {
        let k = Curvature::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = toy_dataset(ToyDensity::Moons, 20, 5, k, &mut rng).unwrap();
        assert_eq!(data.held_out.rows(), 5);
        let back = tangent_coordinates(&data.train, k);
        for (r, p) in back.iter().enumerate() {
            assert!(p[0].abs() <= 1.0 + 1e-9 && p[1].abs() <= 1.0 + 1e-9, "row {r}");
        }
    }

    #[test]
    fn names_round_trip() {
        for d in ToyDensity::ALL {
            assert_eq!(d.name().parse::<ToyDensity>().unwrap(), d);
        }
    }
}
