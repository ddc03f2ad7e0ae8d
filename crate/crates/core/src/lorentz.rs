//! Lorentz (hyperboloid) model of hyperbolic space.
//!
//! A point of the n-dimensional model with curvature `K < 0` is a vector
//! `x = [x_t, x_s] ∈ R^{n+1}` with `x_t > 0` and `<x, x>_L = 1/K`, where
//! `<x, y>_L = -x_t y_t + x_s · y_s` is the Minkowski inner product.
//!
//! Every function here is pure `f64` arithmetic on owned values; the
//! differentiable counterparts used by the neural layers live in
//! [`crate::autodiff`] and [`crate::layers`].
//!
//! Points always store a time component recomputed from the spatial part,
//! `x_t = sqrt(|x_s|^2 - 1/K)`, so the hyperboloid constraint holds to
//! rounding error no matter how the spatial part was produced.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|K<x,x>_L - 1|` for a point to count as on the manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;
/// Relative tolerance on `<x, v>_L` for `v` to count as tangent at `x`.
pub const TANGENT_TOL: f64 = 1e-8;
/// Smallest magnitude used as a divisor.
pub(crate) const DIV_GUARD: f64 = 1e-15;

/// Below this `K<x,y>_L - 1` the distance is evaluated through the
/// chordal form `2 asinh(|x - y|_L sqrt(-K) / 2) / sqrt(-K)`, which is exact
/// for coincident points where `acosh` near 1 loses half the mantissa.
const NEAR_ACOSH_ARG: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curvature must be finite and strictly negative, got {0}")]
    InvalidCurvature(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vectors need at least 2 coordinates, got {0}")]
    TooShort(usize),
    #[error("curvature mismatch: {0} vs {1}")]
    CurvatureMismatch(f64, f64),
    #[error("vector is not tangent at its base point (<x, v>_L = {0:e})")]
    NotTangent(f64),
    #[error("point is off the hyperboloid (|K<x,x>_L - 1| = {0:e})")]
    OffManifold(f64),
    #[error("geodesic parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("centroid weights must be non-negative with a positive sum")]
    InvalidWeights,
    #[error("operation needs at least one point")]
    Empty,
    #[error("split sizes {dims:?} do not sum to spatial dimension {expected}")]
    SplitMismatch { dims: Vec<usize>, expected: usize },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Constant negative sectional curvature `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k < 0.0 {
            Ok(Self(k))
        } else {
            Err(GeometryError::InvalidCurvature(k))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `sqrt(-K)`.
    #[inline]
    pub fn sqrt_neg(self) -> f64 {
        (-self.0).sqrt()
    }

    /// `1/K`, the value of `<x, x>_L` on the manifold.
    #[inline]
    pub fn inv(self) -> f64 {
        1.0 / self.0
    }

    fn check_same(self, other: Curvature) -> Result<()> {
        if self.0 == other.0 {
            Ok(())
        } else {
            Err(GeometryError::CurvatureMismatch(self.0, other.0))
        }
    }
}

impl Default for Curvature {
    fn default() -> Self {
        Self(-1.0)
    }
}

impl TryFrom<f64> for Curvature {
    type Error = GeometryError;
    fn try_from(k: f64) -> Result<Self> {
        Self::new(k)
    }
}

impl From<Curvature> for f64 {
    fn from(k: Curvature) -> f64 {
        k.0
    }
}

/// A point on the hyperboloid `L^n_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    coords: Vec<f64>,
    k: Curvature,
}

impl LorentzPoint {
    /// Lifts a spatial vector onto the hyperboloid by solving for the time
    /// component.
    pub fn from_spatial(spatial: &[f64], k: Curvature) -> Self {
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push(time_for(spatial, k));
        coords.extend_from_slice(spatial);
        Self { coords, k }
    }

    /// Builds a point from full ambient coordinates. The constraint must
    /// already hold to within `tol`; the stored time component is then
    /// recomputed from the spatial part.
    pub fn from_coords(coords: &[f64], k: Curvature, tol: f64) -> Result<Self> {
        if coords.len() < 2 {
            return Err(GeometryError::TooShort(coords.len()));
        }
        let err = (k.value() * lorentz_inner_unchecked(coords, coords) - 1.0).abs();
        if !(err <= tol) || coords[0] <= 0.0 {
            return Err(GeometryError::OffManifold(err));
        }
        Ok(Self::from_spatial(&coords[1..], k))
    }

    /// The origin `o = [1/sqrt(-K), 0, ..., 0]` of `L^n_K`.
    pub fn origin(n: usize, k: Curvature) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[0] = 1.0 / k.sqrt_neg();
        Self { coords, k }
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Manifold dimension `n` (the number of spatial coordinates).
    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    #[inline]
    pub fn curvature(&self) -> Curvature {
        self.k
    }

    /// `|K<x,x>_L - 1|`.
    pub fn closure_error(&self) -> f64 {
        closure_error(&self.coords, self.k)
    }

    fn check_compatible(&self, other: &LorentzPoint) -> Result<()> {
        self.k.check_same(other.k)?;
        if self.coords.len() != other.coords.len() {
            return Err(GeometryError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

/// A tangent vector `v ∈ T_x L^n_K`, stored with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: LorentzPoint,
    components: Vec<f64>,
}

impl TangentVector {
    /// Checks `<base, v>_L ≈ 0` before accepting the components.
    pub fn new(base: LorentzPoint, components: Vec<f64>) -> Result<Self> {
        check_tangent(&base, &components)?;
        Ok(Self { base, components })
    }

    /// Projects arbitrary ambient components onto `T_base`.
    pub fn projected(base: LorentzPoint, mut components: Vec<f64>) -> Result<Self> {
        if components.len() != base.coords.len() {
            return Err(GeometryError::DimensionMismatch(base.coords.len(), components.len()));
        }
        project_tangent_in_place(&base, &mut components);
        Ok(Self { base, components })
    }

    pub fn zero(base: LorentzPoint) -> Self {
        let components = vec![0.0; base.coords.len()];
        Self { base, components }
    }

    #[inline]
    pub fn base(&self) -> &LorentzPoint {
        &self.base
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    /// `sqrt(<v, v>_L)`; tangent vectors are spacelike so this is real.
    pub fn lorentz_norm(&self) -> f64 {
        lorentz_norm(&self.components)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.iter().map(|c| c * s).collect(),
        }
    }
}

#[inline]
fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

#[inline]
fn time_for(spatial: &[f64], k: Curvature) -> f64 {
    (sq_norm(spatial) - k.inv()).sqrt()
}

#[inline]
pub(crate) fn lorentz_inner_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

/// `|K<x,x>_L - 1|` for raw ambient coordinates.
pub fn closure_error(coords: &[f64], k: Curvature) -> f64 {
    (k.value() * lorentz_inner_unchecked(coords, coords) - 1.0).abs()
}

fn lorentz_norm(v: &[f64]) -> f64 {
    lorentz_inner_unchecked(v, v).max(0.0).sqrt()
}

fn euclid_norm(v: &[f64]) -> f64 {
    sq_norm(v).sqrt()
}

fn check_tangent(base: &LorentzPoint, v: &[f64]) -> Result<()> {
    if v.len() != base.coords.len() {
        return Err(GeometryError::DimensionMismatch(base.coords.len(), v.len()));
    }
    let ip = lorentz_inner_unchecked(&base.coords, v);
    let scale = 1.0 + euclid_norm(&base.coords) * euclid_norm(v);
    if ip.abs() <= TANGENT_TOL * scale {
        Ok(())
    } else {
        Err(GeometryError::NotTangent(ip))
    }
}

/// `h - K<x,h>_L x`, the orthogonal projection onto `T_x` (uses
/// `<x,x>_L = 1/K`).
pub(crate) fn project_tangent_in_place(x: &LorentzPoint, h: &mut [f64]) {
    let c = -x.k.value() * lorentz_inner_unchecked(&x.coords, h);
    for (hi, xi) in h.iter_mut().zip(&x.coords) {
        *hi += c * xi;
    }
}

/// Minkowski inner product `-x_t y_t + x_s · y_s`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(GeometryError::DimensionMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(GeometryError::TooShort(x.len()));
    }
    Ok(lorentz_inner_unchecked(x, y))
}

/// Geodesic distance `acosh(K<x,y>_L) / sqrt(-K)`.
pub fn distance(x: &LorentzPoint, y: &LorentzPoint) -> Result<f64> {
    x.check_compatible(y)?;
    Ok(distance_unchecked(&x.coords, &y.coords, x.k))
}

pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], k: Curvature) -> f64 {
    let psi = (k.value() * lorentz_inner_unchecked(x, y)).max(1.0);
    if psi - 1.0 < NEAR_ACOSH_ARG {
        let mut chord = 0.0;
        chord -= (x[0] - y[0]) * (x[0] - y[0]);
        for (a, b) in x[1..].iter().zip(&y[1..]) {
            chord += (a - b) * (a - b);
        }
        let half = chord.max(0.0).sqrt() * k.sqrt_neg() / 2.0;
        2.0 * half.asinh() / k.sqrt_neg()
    } else {
        psi.acosh() / k.sqrt_neg()
    }
}

/// Squared Lorentzian distance `2/K - 2<x,y>_L`.
pub fn squared_lorentz_distance(x: &LorentzPoint, y: &LorentzPoint) -> Result<f64> {
    x.check_compatible(y)?;
    // <x-y, x-y>_L equals 2/K - 2<x,y>_L on the manifold and is exactly zero
    // for coincident points.
    let diff: Vec<f64> = x.coords.iter().zip(&y.coords).map(|(a, b)| a - b).collect();
    Ok(lorentz_inner_unchecked(&diff, &diff).max(0.0))
}

/// Places a spatial vector on the hyperboloid.
pub fn lift_spatial(spatial: &[f64], k: Curvature) -> LorentzPoint {
    LorentzPoint::from_spatial(spatial, k)
}

/// `cosh(φ)x + sinh(φ)v/φ` with `φ = sqrt(-K)|v|_L`.
pub fn exp_map(x: &LorentzPoint, v: &[f64]) -> Result<LorentzPoint> {
    check_tangent(x, v)?;
    Ok(exp_map_unchecked(x, v))
}

pub(crate) fn exp_map_unchecked(x: &LorentzPoint, v: &[f64]) -> LorentzPoint {
    let norm = lorentz_norm(v);
    if norm < 1e-9 {
        return x.clone();
    }
    let phi = x.k.sqrt_neg() * norm;
    let (c, s) = if phi < 1e-6 {
        let p2 = phi * phi;
        (1.0 + p2 / 2.0, 1.0 + p2 / 6.0)
    } else {
        (phi.cosh(), phi.sinh() / phi)
    };
    let spatial: Vec<f64> = x.coords[1..]
        .iter()
        .zip(&v[1..])
        .map(|(xi, vi)| c * xi + s * vi)
        .collect();
    LorentzPoint::from_spatial(&spatial, x.k)
}

/// Inverse of [`exp_map`]: `d(x,y) (y - ψx)/|y - ψx|_L` with `ψ = K<x,y>_L`.
pub fn log_map(x: &LorentzPoint, y: &LorentzPoint) -> Result<TangentVector> {
    x.check_compatible(y)?;
    let d = distance_unchecked(&x.coords, &y.coords, x.k);
    if d == 0.0 {
        return Ok(TangentVector::zero(x.clone()));
    }
    let psi = (x.k.value() * lorentz_inner_unchecked(&x.coords, &y.coords)).max(1.0);
    let mut w: Vec<f64> = y.coords.iter().zip(&x.coords).map(|(yi, xi)| yi - psi * xi).collect();
    let wn = lorentz_norm(&w);
    if wn < DIV_GUARD {
        return Ok(TangentVector::zero(x.clone()));
    }
    let s = d / wn;
    w.iter_mut().for_each(|wi| *wi *= s);
    TangentVector::projected(x.clone(), w)
}

/// Transports `v ∈ T_x` to `T_y` along the connecting geodesic:
/// `v + <y,v>_L / (-1/K - <x,y>_L) (x + y)`.
pub fn parallel_transport(x: &LorentzPoint, y: &LorentzPoint, v: &[f64]) -> Result<TangentVector> {
    x.check_compatible(y)?;
    check_tangent(x, v)?;
    Ok(parallel_transport_unchecked(x, y, v))
}

pub(crate) fn parallel_transport_unchecked(x: &LorentzPoint, y: &LorentzPoint, v: &[f64]) -> TangentVector {
    let denom = (-x.k.inv() - lorentz_inner_unchecked(&x.coords, &y.coords)).max(DIV_GUARD);
    let coef = lorentz_inner_unchecked(&y.coords, v) / denom;
    let mut out: Vec<f64> = v
        .iter()
        .zip(x.coords.iter().zip(&y.coords))
        .map(|(vi, (xi, yi))| vi + coef * (xi + yi))
        .collect();
    project_tangent_in_place(y, &mut out);
    TangentVector { base: y.clone(), components: out }
}

/// The point `exp_x(t log_x(y))` a fraction `t` of the way from `x` to `y`.
pub fn geodesic_point(x: &LorentzPoint, y: &LorentzPoint, t: f64) -> Result<LorentzPoint> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::ParameterOutOfRange(t));
    }
    x.check_compatible(y)?;
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    let v = log_map(x, y)?;
    let step: Vec<f64> = v.components.iter().map(|c| c * t).collect();
    Ok(exp_map_unchecked(x, &step))
}

/// `sinh(φ)/φ`, with a series near zero.
pub(crate) fn sinhc(phi: f64) -> f64 {
    if phi.abs() < 1e-4 {
        let p2 = phi * phi;
        1.0 + p2 / 6.0 + p2 * p2 / 120.0
    } else {
        phi.sinh() / phi
    }
}

/// Euclidean-to-hyperbolic map `exp_o([0, t])`.
pub fn e2h(t: &[f64], k: Curvature) -> LorentzPoint {
    let phi = k.sqrt_neg() * euclid_norm(t);
    let s = sinhc(phi);
    let spatial: Vec<f64> = t.iter().map(|ti| s * ti).collect();
    LorentzPoint::from_spatial(&spatial, k)
}

fn common_curvature(xs: &[LorentzPoint]) -> Result<Curvature> {
    let first = xs.first().ok_or(GeometryError::Empty)?;
    for x in &xs[1..] {
        first.k.check_same(x.k)?;
    }
    Ok(first.k)
}

/// Lorentz direct concatenation: spatial parts are concatenated and the time
/// component becomes `sqrt(Σ x_{i,t}^2 + (N-1)/K)`.
pub fn direct_concat(xs: &[LorentzPoint]) -> Result<LorentzPoint> {
    let k = common_curvature(xs)?;
    let spatial: Vec<f64> = xs.iter().flat_map(|x| x.spatial().iter().copied()).collect();
    // Σ x_t^2 + (N-1)/K equals |spatial|^2 - 1/K on the manifold; lifting the
    // concatenated spatial part evaluates the same quantity without drift.
    Ok(LorentzPoint::from_spatial(&spatial, k))
}

fn check_split(x: &LorentzPoint, dims: &[usize]) -> Result<()> {
    let total: usize = dims.iter().sum();
    if total != x.dim() || dims.contains(&0) {
        return Err(GeometryError::SplitMismatch { dims: dims.to_vec(), expected: x.dim() });
    }
    Ok(())
}

/// Lorentz direct split: partitions the spatial part and re-lifts each piece.
pub fn direct_split(x: &LorentzPoint, dims: &[usize]) -> Result<Vec<LorentzPoint>> {
    check_split(x, dims)?;
    let mut out = Vec::with_capacity(dims.len());
    let mut start = 0;
    for &d in dims {
        out.push(LorentzPoint::from_spatial(&x.spatial()[start..start + d], x.k));
        start += d;
    }
    Ok(out)
}

/// Lorentz tangent concatenation: `exp_o([0, v_1s, ..., v_Ns])` with
/// `v_i = log_o(x_i)`.
pub fn tangent_concat(xs: &[LorentzPoint]) -> Result<LorentzPoint> {
    let k = common_curvature(xs)?;
    let mut tangent = vec![0.0];
    for x in xs {
        let o = LorentzPoint::origin(x.dim(), k);
        let v = log_map(&o, x)?;
        tangent.extend_from_slice(&v.components[1..]);
    }
    let o = LorentzPoint::origin(tangent.len() - 1, k);
    Ok(exp_map_unchecked(&o, &tangent))
}

/// Lorentz tangent split: `log_o`, partition the spatial tangent part, and
/// map each piece back with `exp_o`.
pub fn tangent_split(x: &LorentzPoint, dims: &[usize]) -> Result<Vec<LorentzPoint>> {
    check_split(x, dims)?;
    let o = LorentzPoint::origin(x.dim(), x.k);
    let v = log_map(&o, x)?;
    let mut out = Vec::with_capacity(dims.len());
    let mut start = 1;
    for &d in dims {
        let mut piece = vec![0.0];
        piece.extend_from_slice(&v.components[start..start + d]);
        out.push(exp_map_unchecked(&LorentzPoint::origin(d, x.k), &piece));
        start += d;
    }
    Ok(out)
}

/// Closed-form weighted centroid
/// `Σν_i x_i / (sqrt(-K) | |Σν_i x_i|_L |)`.
pub fn centroid(points: &[LorentzPoint], weights: &[f64]) -> Result<LorentzPoint> {
    let k = common_curvature(points)?;
    if weights.len() != points.len() {
        return Err(GeometryError::DimensionMismatch(points.len(), weights.len()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !(weights.iter().sum::<f64>() > 0.0) {
        return Err(GeometryError::InvalidWeights);
    }
    let len = points[0].coords.len();
    let mut sum = vec![0.0; len];
    for (p, &w) in points.iter().zip(weights) {
        if p.coords.len() != len {
            return Err(GeometryError::DimensionMismatch(len - 1, p.dim()));
        }
        for (s, c) in sum.iter_mut().zip(&p.coords) {
            *s += w * c;
        }
    }
    let q = lorentz_inner_unchecked(&sum, &sum).abs().sqrt().max(DIV_GUARD);
    let scale = 1.0 / (k.sqrt_neg() * q);
    let spatial: Vec<f64> = sum[1..].iter().map(|s| s * scale).collect();
    Ok(LorentzPoint::from_spatial(&spatial, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k1() -> Curvature {
        Curvature::default()
    }

    fn pt(coords: &[f64]) -> LorentzPoint {
        LorentzPoint::from_spatial(&coords[1..], k1())
    }

    #[test]
    fn curvature_rejects_non_negative() {
        assert!(Curvature::new(0.0).is_err());
        assert!(Curvature::new(1.0).is_err());
        assert!(Curvature::new(f64::NAN).is_err());
        assert_eq!(Curvature::new(-0.5).unwrap().value(), -0.5);
    }

    #[test]
    fn inner_product_examples() {
        let o = LorentzPoint::origin(3, k1());
        assert_eq!(lorentz_inner(o.coords(), o.coords()).unwrap(), -1.0);
        let x = [2f64.sqrt(), 1.0];
        assert!((lorentz_inner(&x, &x).unwrap() + 1.0).abs() < 1e-15);
        assert!((lorentz_inner(&x, &[1.0, 0.0]).unwrap() + 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lorentz_inner(&[1.0, 0.0], &[1.0]), Err(GeometryError::DimensionMismatch(2, 1)));
    }

    #[test]
    fn lift_examples() {
        let o = lift_spatial(&[0.0, 0.0], k1());
        assert_eq!(o.coords(), &[1.0, 0.0, 0.0]);
        assert_eq!(lift_spatial(&[1.0], k1()).coords(), &[2f64.sqrt(), 1.0]);
        assert_eq!(lift_spatial(&[3.0, 4.0], k1()).coords(), &[26f64.sqrt(), 3.0, 4.0]);
    }

    #[test]
    fn distance_examples() {
        let o = LorentzPoint::origin(1, k1());
        let y = pt(&[1f64.cosh(), 1f64.sinh()]);
        assert!((distance(&o, &y).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(distance(&y, &y).unwrap(), 0.0);
        let other = LorentzPoint::origin(1, Curvature::new(-2.0).unwrap());
        assert!(matches!(distance(&o, &other), Err(GeometryError::CurvatureMismatch(..))));
    }

    #[test]
    fn exp_log_examples() {
        let o = LorentzPoint::origin(1, k1());
        let y = exp_map(&o, &[0.0, 1.0]).unwrap();
        assert!((y.time() - 1f64.cosh()).abs() < 1e-12);
        assert!((y.spatial()[0] - 1f64.sinh()).abs() < 1e-12);
        let v = log_map(&o, &y).unwrap();
        assert!(v.components()[0].abs() < 1e-12);
        assert!((v.components()[1] - 1.0).abs() < 1e-12);
        assert_eq!(exp_map(&y, &[0.0, 0.0]).unwrap(), y);
        assert_eq!(log_map(&y, &y).unwrap().components(), &[0.0, 0.0]);
        assert!(matches!(exp_map(&o, &[1.0, 0.0]), Err(GeometryError::NotTangent(_))));
    }

    #[test]
    fn parallel_transport_example() {
        let o = LorentzPoint::origin(1, k1());
        let y = pt(&[1f64.cosh(), 1f64.sinh()]);
        let u = parallel_transport(&o, &y, &[0.0, 1.0]).unwrap();
        assert!(lorentz_inner(y.coords(), u.components()).unwrap().abs() < 1e-12);
        assert!((u.lorentz_norm() - 1.0).abs() < 1e-12);
        let same = parallel_transport(&o, &o, &[0.0, 1.0]).unwrap();
        assert_eq!(same.components(), &[0.0, 1.0]);
        assert!(parallel_transport(&o, &y, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let o = LorentzPoint::origin(1, k1());
        let y = pt(&[2f64.cosh(), 2f64.sinh()]);
        let g = geodesic_point(&o, &y, 0.25).unwrap();
        assert!((g.time() - 0.5f64.cosh()).abs() < 1e-12);
        assert!((g.spatial()[0] - 0.5f64.sinh()).abs() < 1e-12);
        assert_eq!(geodesic_point(&o, &y, 0.0).unwrap(), o);
        assert_eq!(geodesic_point(&o, &y, 1.0).unwrap(), y);
        assert!(geodesic_point(&o, &y, 1.5).is_err());
        assert!(geodesic_point(&o, &y, -0.1).is_err());
    }

    #[test]
    fn e2h_examples() {
        assert_eq!(e2h(&[0.0, 0.0], k1()), LorentzPoint::origin(2, k1()));
        let p = e2h(&[1.0], k1());
        assert!((p.time() - 1f64.cosh()).abs() < 1e-12);
        assert!((p.spatial()[0] - 1f64.sinh()).abs() < 1e-12);
        let t = [0.3, -1.2, 0.7];
        let n = euclid_norm(&t);
        let p = e2h(&t, k1());
        assert!((euclid_norm(p.spatial()) - n.sinh()).abs() < 1e-12);
    }

    #[test]
    fn direct_concat_examples() {
        let o = LorentzPoint::origin(2, k1());
        let c = direct_concat(&[o.clone(), o.clone(), o.clone()]).unwrap();
        assert_eq!(c, LorentzPoint::origin(6, k1()));

        let x = pt(&[2.0, 3f64.sqrt()]);
        let y = direct_concat(&[x.clone(), x.clone()]).unwrap();
        assert!((y.time() - 7f64.sqrt()).abs() < 1e-15);
        assert_eq!(y.spatial(), &[3f64.sqrt(), 3f64.sqrt()]);
        assert!((lorentz_inner(y.coords(), y.coords()).unwrap() + 1.0).abs() < 1e-14);
        // Σ x_t^2 + (N-1)/K evaluated literally agrees with the lift.
        assert!((y.time() - (x.time().powi(2) * 2.0 - 1.0).sqrt()).abs() < 1e-14);

        let other = LorentzPoint::origin(1, Curvature::new(-2.0).unwrap());
        assert!(direct_concat(&[x, other]).is_err());
        assert_eq!(direct_concat(&[]), Err(GeometryError::Empty));
    }

    #[test]
    fn direct_split_examples() {
        let parts = direct_split(&LorentzPoint::origin(4, k1()), &[1, 3]).unwrap();
        assert_eq!(parts, vec![LorentzPoint::origin(1, k1()), LorentzPoint::origin(3, k1())]);
        let z = pt(&[7f64.sqrt(), 3f64.sqrt(), 3f64.sqrt()]);
        let parts = direct_split(&z, &[1, 1]).unwrap();
        for p in &parts {
            assert!((p.time() - 2.0).abs() < 1e-15);
            assert_eq!(p.spatial(), &[3f64.sqrt()]);
        }
        assert!(direct_split(&z, &[1, 2]).is_err());
        assert!(direct_split(&z, &[2, 0]).is_err());
    }

    #[test]
    fn tangent_concat_examples() {
        let o = LorentzPoint::origin(2, k1());
        assert_eq!(tangent_concat(&[o.clone(), o]).unwrap(), LorentzPoint::origin(4, k1()));
        let x = pt(&[1f64.cosh(), 1f64.sinh()]);
        let z = tangent_concat(&[x.clone(), x]).unwrap();
        let r2 = 2f64.sqrt();
        assert!((z.time() - r2.cosh()).abs() < 1e-12);
        for s in z.spatial() {
            assert!((s - r2.sinh() / r2).abs() < 1e-12);
        }
        let parts = tangent_split(&LorentzPoint::origin(3, k1()), &[2, 1]).unwrap();
        assert_eq!(parts[0], LorentzPoint::origin(2, k1()));
    }

    #[test]
    fn centroid_examples() {
        let x = pt(&[1f64.cosh(), 1f64.sinh()]);
        let y = pt(&[1f64.cosh(), -(1f64.sinh())]);
        let c = centroid(std::slice::from_ref(&x), &[1.0]).unwrap();
        assert!(c.coords().iter().zip(x.coords()).all(|(a, b)| (a - b).abs() < 1e-12));
        let c = centroid(&[x.clone(), x.clone()], &[0.5, 0.5]).unwrap();
        assert!(c.coords().iter().zip(x.coords()).all(|(a, b)| (a - b).abs() < 1e-12));
        let c = centroid(&[x.clone(), y.clone()], &[1.0, 1.0]).unwrap();
        assert!((c.time() - 1.0).abs() < 1e-12 && c.spatial()[0].abs() < 1e-12);
        assert_eq!(centroid(&[x.clone(), y.clone()], &[0.0, 0.0]), Err(GeometryError::InvalidWeights));
        assert_eq!(centroid(&[x, y], &[1.0, -1.0]), Err(GeometryError::InvalidWeights));
    }

    #[test]
    fn squared_distance_examples() {
        let o = LorentzPoint::origin(1, k1());
        let y = pt(&[1f64.cosh(), 1f64.sinh()]);
        assert_eq!(squared_lorentz_distance(&y, &y).unwrap(), 0.0);
        let d2 = squared_lorentz_distance(&o, &y).unwrap();
        assert!((d2 - (2.0 * 1f64.cosh() - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn from_coords_validates() {
        assert!(LorentzPoint::from_coords(&[1.0, 1.0], k1(), 1e-9).is_err());
        let p = LorentzPoint::from_coords(&[2f64.sqrt(), 1.0], k1(), 1e-9).unwrap();
        assert_eq!(p.spatial(), &[1.0]);
    }
}
