//! Differentiable Lorentz-model operations on batches.
//!
//! A batch of points is a `B × (n+1)` tensor whose rows are ambient
//! coordinates; column 0 is the time component.

use crate::autodiff::{Graph, Tensor, UnaryFn};
use crate::error::{Error, Result};
use crate::lorentz::Curvature;
use crate::matrix::Matrix;

/// The spatial columns `1..` of a batch of points.
pub fn spatial(g: &mut Graph, x: Tensor) -> Result<Tensor> {
    let cols = g.shape(x).1;
    g.slice_cols(x, 1, cols - 1)
}

/// Prepends `sqrt(|s|^2 - 1/K)` to each row of the spatial batch `s`.
pub fn lift(g: &mut Graph, s: Tensor, k: Curvature) -> Result<Tensor> {
    let sq = g.square(s);
    let r2 = g.row_sum(sq);
    let t2 = g.add_const(r2, -k.inv());
    let time = g.sqrt(t2);
    g.concat_cols(&[time, s])
}

/// `exp_o([0, v])` for a batch of spatial tangent vectors `v` at the origin.
pub fn exp_origin(g: &mut Graph, v: Tensor, k: Curvature) -> Result<Tensor> {
    let sq = g.square(v);
    let r2 = g.row_sum(sq);
    let u = g.scale(r2, -k.value());
    let coef = g.unary(u, UnaryFn::SinhcSqrt);
    let s = g.mul_col(v, coef)?;
    lift(g, s, k)
}

/// Spatial part of `log_o(x)` for a batch of points.
///
/// Evaluated as `asinh(a)/a · x_s` with `a = sqrt(-K)|x_s|`, which equals
/// `acosh(sqrt(-K) x_t)/sqrt(-K) · x_s/|x_s|` on the manifold and stays
/// smooth at the origin.
pub fn log_origin(g: &mut Graph, x: Tensor, k: Curvature) -> Result<Tensor> {
    let s = spatial(g, x)?;
    let sq = g.square(s);
    let r2 = g.row_sum(sq);
    let a = g.scale(r2, -k.value());
    let coef = g.unary(a, UnaryFn::AsinhcSqrt);
    g.mul_col(s, coef)
}

/// Euclidean-to-hyperbolic map of a batch of Euclidean rows.
pub fn e2h(g: &mut Graph, t: Tensor, k: Curvature) -> Result<Tensor> {
    exp_origin(g, t, k)
}

/// Lorentz direct concatenation of batches with equal row counts: spatial
/// columns are concatenated and the time column is
/// `sqrt(Σ x_{i,t}^2 + (N-1)/K)`.
pub fn direct_concat(g: &mut Graph, parts: &[Tensor], k: Curvature) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::Degenerate("concatenation of zero points".into()));
    }
    let mut t2: Option<Tensor> = None;
    let mut spatials = Vec::with_capacity(parts.len() + 1);
    spatials.push(parts[0]); // placeholder for the time column
    for &p in parts {
        let t = g.slice_cols(p, 0, 1)?;
        let sq = g.square(t);
        t2 = Some(match t2 {
            Some(acc) => g.add(acc, sq)?,
            None => sq,
        });
        spatials.push(spatial(g, p)?);
    }
    let n = parts.len() as f64;
    let shifted = g.add_const(t2.expect("non-empty"), (n - 1.0) * k.inv());
    spatials[0] = g.sqrt(shifted);
    g.concat_cols(&spatials)
}

/// Lorentz tangent concatenation: `exp_o` of the concatenated spatial parts
/// of `log_o(x_i)`.
pub fn tangent_concat(g: &mut Graph, parts: &[Tensor], k: Curvature) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::Degenerate("concatenation of zero points".into()));
    }
    let mut logs = Vec::with_capacity(parts.len());
    for &p in parts {
        logs.push(log_origin(g, p, k)?);
    }
    let v = g.concat_cols(&logs)?;
    exp_origin(g, v, k)
}

fn split_bounds(total: usize, dims: &[usize]) -> Result<()> {
    if dims.iter().sum::<usize>() != total || dims.contains(&0) {
        return Err(Error::Degenerate(format!("split sizes {dims:?} do not sum to {total}")));
    }
    Ok(())
}

/// Lorentz direct split: partition spatial columns and re-lift each piece.
pub fn direct_split(g: &mut Graph, x: Tensor, dims: &[usize], k: Curvature) -> Result<Vec<Tensor>> {
    split_bounds(g.shape(x).1 - 1, dims)?;
    let mut out = Vec::with_capacity(dims.len());
    let mut start = 1;
    for &d in dims {
        let s = g.slice_cols(x, start, d)?;
        out.push(lift(g, s, k)?);
        start += d;
    }
    Ok(out)
}

/// Lorentz tangent split: partition `log_o(x)` and map each piece back.
pub fn tangent_split(g: &mut Graph, x: Tensor, dims: &[usize], k: Curvature) -> Result<Vec<Tensor>> {
    split_bounds(g.shape(x).1 - 1, dims)?;
    let v = log_origin(g, x, k)?;
    let mut out = Vec::with_capacity(dims.len());
    let mut start = 0;
    for &d in dims {
        let s = g.slice_cols(v, start, d)?;
        out.push(exp_origin(g, s, k)?);
        start += d;
    }
    Ok(out)
}

/// Pairwise geodesic distances between rows of `x` (`B × (n+1)`) and rows of
/// `c` (`m × (n+1)`), shape `B × m`.
pub fn pairwise_distance(g: &mut Graph, x: Tensor, c: Tensor, k: Curvature) -> Result<Tensor> {
    let ip = g.lorentz_gram(x, c)?;
    let psi = g.scale(ip, k.value());
    let d = g.acosh(psi);
    Ok(g.scale(d, 1.0 / k.sqrt_neg()))
}

/// Row-wise geodesic distance between two batches of equal shape, `B × 1`.
pub fn rowwise_distance(g: &mut Graph, x: Tensor, y: Tensor, k: Curvature) -> Result<Tensor> {
    let ip = g.lorentz_inner(x, y)?;
    let psi = g.scale(ip, k.value());
    let d = g.acosh(psi);
    Ok(g.scale(d, 1.0 / k.sqrt_neg()))
}

/// Weighted hyperbolic centroids. Output row `i` aggregates the rows of
/// `points` listed in `segments[i]` (summed in that order) as
/// `Σν_j x_j / (sqrt(-K) |<Σν_j x_j, Σν_j x_j>_L|^{1/2})`, with the time
/// component re-lifted from the spatial part. `weights`, when given, is a
/// column with one non-negative entry per row of `points`.
pub fn centroid(
    g: &mut Graph,
    points: Tensor,
    segments: Vec<Vec<usize>>,
    weights: Option<Tensor>,
    k: Curvature,
) -> Result<Tensor> {
    if segments.iter().any(Vec::is_empty) {
        return Err(Error::Degenerate("centroid of an empty set".into()));
    }
    let weighted = match weights {
        Some(w) => {
            if g.value(w).data().iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::Geometry(crate::lorentz::GeometryError::InvalidWeights));
            }
            g.mul_col(points, w)?
        }
        None => points,
    };
    let s = g.segment_sum(weighted, segments)?;
    let q = g.lorentz_inner(s, s)?;
    let neg_q = g.scale(q, -1.0);
    let norm = g.sqrt(neg_q);
    let denom = g.scale(norm, k.sqrt_neg());
    let (rows, _) = g.shape(denom);
    let ones = g.constant(Matrix::filled(rows, 1, 1.0));
    let inv = g.div(ones, denom)?;
    let mu = g.mul_col(s, inv)?;
    let sp = spatial(g, mu)?;
    lift(g, sp, k)
}

/// Largest `|K<x,x>_L - 1|` over the rows of a batch.
pub fn max_closure_error(points: &Matrix, k: Curvature) -> f64 {
    (0..points.rows())
        .map(|r| crate::lorentz::closure_error(points.row(r), k))
        .fold(0.0, f64::max)
}
