//! Conversion of Euclidean gradients into Riemannian gradients on the
//! hyperboloid: negate the time entry (apply the inverse metric), then project
//! onto the tangent space with `h - K<x,h>_L x`. Because `<x,x>_L = 1/K`, this
//! is the sign that makes the result orthogonal to `x`.

use super::{time_sign, Graph, Tensor};
use crate::error::Result;
use crate::lorentz::{self, Curvature, LorentzPoint, TangentVector};
use crate::matrix::Matrix;

pub fn riemannian_grad(x: &LorentzPoint, euclid_grad: &[f64]) -> Result<TangentVector> {
    let mut h = euclid_grad.to_vec();
    if let Some(t) = h.first_mut() {
        *t = -*t;
    }
    Ok(TangentVector::projected(x.clone(), h)?)
}

/// Row-wise Riemannian gradients for a matrix whose rows are points.
pub fn riemannian_grad_rows(points: &Matrix, euclid_grad: &Matrix, k: Curvature) -> Matrix {
    let mut out = euclid_grad.clone();
    for r in 0..out.rows() {
        let x = points.row(r);
        let h = out.row_mut(r);
        h[0] = -h[0];
        let c = -k.value() * lorentz::lorentz_inner_unchecked(x, h);
        for (hi, xi) in h.iter_mut().zip(x) {
            *hi += c * xi;
        }
    }
    out
}

impl Graph {
    /// Differentiable row-wise Riemannian gradient.
    pub fn riemannian_grad(&mut self, points: Tensor, euclid_grad: Tensor, k: Curvature) -> Result<Tensor> {
        let cols = self.shape(points).1;
        let h = self.scale_cols(euclid_grad, time_sign(cols))?;
        let ip = self.lorentz_inner(points, h)?;
        let c = self.scale(ip, -k.value());
        let corr = self.mul_col(points, c)?;
        self.add(h, corr)
    }

    /// Row-wise `sqrt(max(<v,v>_L, 0))`.
    pub fn lorentz_norm(&mut self, v: Tensor) -> Result<Tensor> {
        let sq = self.lorentz_inner(v, v)?;
        Ok(self.sqrt(sq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_tangent() {
        let k = Curvature::new(-2.5).unwrap();
        let x = LorentzPoint::from_spatial(&[1.3, -0.4, 2.2], k);
        let v = riemannian_grad(&x, &[0.7, 0.1, -3.0, 0.4]).unwrap();
        let ip = lorentz::lorentz_inner(x.coords(), v.components()).unwrap();
        assert!(ip.abs() < 1e-12, "{ip}");
    }

    #[test]
    fn zero_gradient_gives_zero_tangent() {
        let x = LorentzPoint::from_spatial(&[0.3, -0.2], Curvature::default());
        let v = riemannian_grad(&x, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.components(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn graph_and_plain_versions_agree() {
        let k = Curvature::new(-0.7).unwrap();
        let x = LorentzPoint::from_spatial(&[0.4, 1.3, -0.2], k);
        let e = [0.2, -1.1, 0.6, 0.05];
        let plain = riemannian_grad(&x, &e).unwrap();
        let mut g = Graph::new();
        let xt = g.constant(Matrix::row_vector(x.coords()));
        let et = g.constant(Matrix::row_vector(&e));
        let r = g.riemannian_grad(xt, et, k).unwrap();
        for (a, b) in g.value(r).data().iter().zip(plain.components()) {
            assert!((a - b).abs() < 1e-14);
        }
        let rows = riemannian_grad_rows(&Matrix::row_vector(x.coords()), &Matrix::row_vector(&e), k);
        assert_eq!(rows.data(), g.value(r).data());
    }
}
