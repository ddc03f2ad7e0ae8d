use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lorentz::{self, LorentzPoint};
use crate::matrix::Matrix;

/// Wrapped normal distribution: a Gaussian in the tangent space at the
/// origin, parallel-transported to the mean and pushed onto the manifold by
/// the exponential map.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedNormal {
    mean: LorentzPoint,
    diag_cov: Vec<f64>,
}

impl WrappedNormal {
    pub fn new(mean: LorentzPoint, diag_cov: Vec<f64>) -> Result<Self> {
        if diag_cov.len() != mean.dim() {
            return Err(Error::Shape { op: "wrapped_normal", left: (1, mean.dim()), right: (1, diag_cov.len()) });
        }
        if diag_cov.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::Config("wrapped normal variances must be positive".into()));
        }
        Ok(Self { mean, diag_cov })
    }

    /// Identity covariance.
    pub fn standard(mean: LorentzPoint) -> Self {
        let n = mean.dim();
        Self { mean, diag_cov: vec![1.0; n] }
    }

    /// Isotropic covariance `var · I`.
    pub fn isotropic(mean: LorentzPoint, var: f64) -> Result<Self> {
        let n = mean.dim();
        Self::new(mean, vec![var; n])
    }

    pub fn mean(&self) -> &LorentzPoint {
        &self.mean
    }

    pub fn diag_cov(&self) -> &[f64] {
        &self.diag_cov
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LorentzPoint {
        let k = self.mean.curvature();
        let mut v = Vec::with_capacity(self.diag_cov.len() + 1);
        v.push(0.0);
        for &var in &self.diag_cov {
            v.push(var.sqrt() * rng.sample::<f64, _>(StandardNormal));
        }
        let o = LorentzPoint::origin(self.mean.dim(), k);
        let u = lorentz::parallel_transport_unchecked(&o, &self.mean, &v);
        lorentz::exp_map_unchecked(&self.mean, u.components())
    }

    /// `count` samples as the rows of a matrix.
    pub fn sample_batch<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Matrix {
        let cols = self.mean.dim() + 1;
        let mut data = Vec::with_capacity(count * cols);
        for _ in 0..count {
            data.extend_from_slice(self.sample(rng).coords());
        }
        Matrix::from_vec(count, cols, data)
    }
}
