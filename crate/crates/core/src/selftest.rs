//! Randomized self-test of the closed-form geometry and the autodiff tape.
//!
//! Each property is evaluated on freshly sampled cases and reported as the
//! largest error seen against its tolerance. The same routine backs the
//! `manifold-selftest` command and the geometry acceptance check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{fd_check, fd_check_params, Graph, ParamStore, Tensor};
use crate::error::Result;
use crate::layers::{ops, Adjacency, HCDist, HEmbed, HGcn, HLinear, HLinearConfig};
use crate::lorentz::{self, Curvature, LorentzPoint, TangentVector};
use crate::matrix::Matrix;

/// A deliberate defect injected into the exponential map, used to prove the
/// self-test can fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Clamp the time component of every exp-map output to at most this
    /// value, which pushes far points off the hyperboloid.
    TimeClamp(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub properties: Vec<PropertyResult>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfTestConfig {
    /// Randomized cases per geometry property.
    pub cases: usize,
    /// Cases per finite-difference property (each costs many evaluations).
    pub gradient_cases: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        Self { cases: 10_000, gradient_cases: 50, seed: 0, fault: None }
    }
}

pub const CLOSURE_TOL: f64 = 1e-9;
pub const ROUNDTRIP_TOL: f64 = 1e-6;
pub const ISOMETRY_TOL: f64 = 1e-8;
pub const GEODESIC_SPEED_TOL: f64 = 1e-6;
pub const TANGENT_SPLIT_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-4;

fn curvature<R: Rng>(rng: &mut R) -> Curvature {
    Curvature::new(-rng.random_range(0.25..2.0)).expect("negative")
}

fn normal_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect()
}

fn point<R: Rng>(rng: &mut R, n: usize, k: Curvature) -> LorentzPoint {
    let scale = rng.random_range(0.05..1.5);
    LorentzPoint::from_spatial(&normal_vec(rng, n, scale), k)
}

/// A tangent vector at `x` with Lorentz norm below `max_norm`.
fn tangent<R: Rng>(rng: &mut R, x: &LorentzPoint, max_norm: f64) -> TangentVector {
    let mut raw = vec![0.0];
    raw.extend(normal_vec(rng, x.dim(), 1.0));
    let v = TangentVector::projected(x.clone(), raw).expect("matching dimension");
    let norm = v.lorentz_norm().max(1e-12);
    v.scaled(rng.random_range(0.0..max_norm) / norm)
}

fn exp_with_fault(x: &LorentzPoint, v: &[f64], fault: Option<Fault>) -> Result<Vec<f64>> {
    let mut coords = lorentz::exp_map(x, v)?.into_coords();
    if let Some(Fault::TimeClamp(max)) = fault {
        coords[0] = coords[0].min(max);
    }
    Ok(coords)
}

fn lorentz_norm(v: &[f64]) -> f64 {
    lorentz::lorentz_inner(v, v).unwrap_or(0.0).max(0.0).sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn record(name: &str, cases: usize, max_error: f64, tolerance: f64) -> PropertyResult {
    // NaN counts as a failure.
    let max_error = if max_error.is_nan() { f64::INFINITY } else { max_error };
    PropertyResult { name: name.into(), cases, max_error, tolerance }
}

/// Runs every property and returns the per-property maximum errors.
pub fn run_selftest(config: &SelfTestConfig) -> Result<SelfTestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_cases = config.cases;
    let mut closure = 0.0f64;
    let mut roundtrip = 0.0f64;
    let mut isometry = 0.0f64;
    let mut speed = 0.0f64;
    let mut direct = 0.0f64;
    let mut tangent_split = 0.0f64;
    let mut symmetry = 0.0f64;

    for _ in 0..n_cases {
        let k = curvature(&mut rng);
        let n = rng.random_range(1..=8);
        let x = point(&mut rng, n, k);
        let y = point(&mut rng, n, k);
        let v = tangent(&mut rng, &x, 4.0 / k.sqrt_neg());

        let moved = exp_with_fault(&x, v.components(), config.fault)?;
        closure = closure.max(lorentz::closure_error(&moved, k));

        let back = lorentz::log_map(&x, &lorentz::exp_map(&x, v.components())?)?;
        roundtrip = roundtrip.max(max_abs_diff(back.components(), v.components()));

        let moved_v = lorentz::parallel_transport(&x, &y, v.components())?;
        let before = lorentz_norm(v.components());
        let after = lorentz_norm(moved_v.components());
        isometry = isometry.max((after - before).abs() / before.max(1.0));

        let t: f64 = rng.random();
        let d = lorentz::distance(&x, &y)?;
        let p = lorentz::geodesic_point(&x, &y, t)?;
        speed = speed.max((lorentz::distance(&x, &p)? - t * d).abs() / d.max(1.0));
        symmetry = symmetry.max((d - lorentz::distance(&y, &x)?).abs());

        let m = rng.random_range(1..=8);
        let z = point(&mut rng, m, k);
        let joined = lorentz::direct_concat(&[x.clone(), z.clone()])?;
        let parts = lorentz::direct_split(&joined, &[n, m])?;
        direct = direct.max(max_abs_diff(parts[0].coords(), x.coords())).max(max_abs_diff(parts[1].coords(), z.coords()));

        let joined = lorentz::tangent_concat(&[x.clone(), z.clone()])?;
        let parts = lorentz::tangent_split(&joined, &[n, m])?;
        tangent_split =
            tangent_split.max(max_abs_diff(parts[0].coords(), x.coords())).max(max_abs_diff(parts[1].coords(), z.coords()));
    }

    let mut properties = vec![
        record("hyperboloid_closure", n_cases, closure, CLOSURE_TOL),
        record("exp_log_roundtrip", n_cases, roundtrip, ROUNDTRIP_TOL),
        record("transport_isometry", n_cases, isometry, ISOMETRY_TOL),
        record("geodesic_speed", n_cases, speed, GEODESIC_SPEED_TOL),
        record("distance_symmetry", n_cases, symmetry, 1e-12),
        record("direct_split_concat", n_cases, direct, 0.0),
        record("tangent_split_concat", n_cases, tangent_split, TANGENT_SPLIT_TOL),
    ];
    properties.extend(gradient_properties(&mut rng, config.gradient_cases)?);
    let first = rng.random::<u64>();
    properties.extend(layer_gradient_checks(first..first + config.gradient_cases as u64, 1e-5)?);
    Ok(SelfTestReport { properties })
}

fn spatial_batch<R: Rng>(rng: &mut R, rows: usize, n: usize) -> Matrix {
    Matrix::from_vec(rows, n, normal_vec(rng, rows * n, 0.7))
}

fn weights<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, normal_vec(rng, rows * cols, 1.0))
}

/// Finite-difference checks of the differentiable Lorentz operations,
/// each reduced to a scalar through a random linear functional.
fn gradient_properties<R: Rng>(rng: &mut R, cases: usize) -> Result<Vec<PropertyResult>> {
    let h = 1e-5;
    let mut worst = [0.0f64; 4];
    for _ in 0..cases {
        let k = curvature(rng);
        let (rows, n, m) = (rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=4));
        let a = spatial_batch(rng, rows, n);
        let b = spatial_batch(rng, rows, m);
        let w = weights(rng, rows, n + m + 1);
        let wd = weights(rng, rows, rows);

        worst[0] = worst[0].max(fd_check(
            |g, x| {
                let (p, q) = (ops::lift(g, x[0], k)?, ops::lift(g, x[1], k)?);
                let z = ops::direct_concat(g, &[p, q], k)?;
                linear_functional(g, z, &w)
            },
            &[a.clone(), b.clone()],
            h,
        )?);
        worst[1] = worst[1].max(fd_check(
            |g, x| {
                let (p, q) = (ops::exp_origin(g, x[0], k)?, ops::exp_origin(g, x[1], k)?);
                let z = ops::tangent_concat(g, &[p, q], k)?;
                linear_functional(g, z, &w)
            },
            &[a.clone(), b.clone()],
            h,
        )?);
        let wl = weights(rng, rows, n);
        worst[2] = worst[2].max(fd_check(
            |g, x| {
                let p = ops::exp_origin(g, x[0], k)?;
                let v = ops::log_origin(g, p, k)?;
                let c = g.constant(wl.clone());
                let prod = g.mul(v, c)?;
                Ok(g.sum(prod))
            },
            std::slice::from_ref(&a),
            h,
        )?);
        let c = spatial_batch(rng, rows, n);
        worst[3] = worst[3].max(fd_check(
            |g, x| {
                let (p, q) = (ops::lift(g, x[0], k)?, ops::lift(g, x[1], k)?);
                let d = ops::pairwise_distance(g, p, q, k)?;
                let c = g.constant(wd.clone());
                let prod = g.mul(d, c)?;
                Ok(g.sum(prod))
            },
            &[a, c],
            h,
        )?);
    }
    Ok(vec![
        record("grad_direct_concat", cases, worst[0], GRADIENT_TOL),
        record("grad_tangent_concat", cases, worst[1], GRADIENT_TOL),
        record("grad_exp_log_origin", cases, worst[2], GRADIENT_TOL),
        record("grad_distance", cases, worst[3], GRADIENT_TOL),
    ])
}

/// Names of the properties produced by [`layer_gradient_checks`].
pub const LAYER_GRADIENTS: [&str; 7] = [
    "grad_layer_hlinear",
    "grad_layer_hcdist",
    "grad_layer_hcent",
    "grad_layer_hgcn",
    "grad_layer_hembed",
    "grad_layer_direct_concat",
    "grad_layer_tangent_concat",
];

/// Finite-difference checks of every layer, one case per seed. Each case
/// checks the gradient with respect to the inputs and, for layers with
/// parameters, with respect to every parameter value.
pub fn layer_gradient_checks(seeds: std::ops::Range<u64>, h: f64) -> Result<Vec<PropertyResult>> {
    let cases = seeds.clone().count();
    let mut worst = [0.0f64; 7];
    for seed in seeds {
        let errors = layer_case(&mut ChaCha8Rng::seed_from_u64(seed), h)?;
        for (w, e) in worst.iter_mut().zip(errors) {
            *w = w.max(if e.is_nan() { f64::INFINITY } else { e });
        }
    }
    Ok(LAYER_GRADIENTS.iter().zip(worst).map(|(name, e)| record(name, cases, e, GRADIENT_TOL)).collect())
}

/// Both input and parameter errors of one layer applied to lifted inputs.
fn check_layer<F>(store: &mut ParamStore, input: &Matrix, k: Curvature, h: f64, mut f: F) -> Result<f64>
where
    F: FnMut(&mut Graph, &ParamStore, Tensor) -> Result<Tensor>,
{
    let by_input = {
        let store = &*store;
        fd_check(
            |g, x| {
                let p = ops::lift(g, x[0], k)?;
                f(g, store, p)
            },
            std::slice::from_ref(input),
            h,
        )?
    };
    let by_param = fd_check_params(
        store,
        |g, store| {
            let x = g.constant(input.clone());
            let p = ops::lift(g, x, k)?;
            f(g, store, p)
        },
        h,
    )?;
    Ok(by_input.max(by_param))
}

fn layer_case<R: Rng>(rng: &mut R, h: f64) -> Result<[f64; 7]> {
    let k = curvature(rng);
    let (rows, n, m) = (rng.random_range(2..=4), rng.random_range(1..=4), rng.random_range(1..=4));
    let input = spatial_batch(rng, rows, n);
    let wo = weights(rng, rows, m + 1);
    let wd = weights(rng, rows, m);
    let lin = HLinearConfig { curvature: k, init_range: rng.random_range(0.5..2.0), ..Default::default() };

    let mut store = ParamStore::new();
    let layer = HLinear::new(&mut store, "lin", n, m, lin, rng);
    // Move the gate and bias away from their symmetric initial values.
    for id in layer.param_ids() {
        for v in store.get_mut(id).value.data_mut() {
            *v += 0.3 * Distribution::<f64>::sample(&StandardNormal, rng);
        }
    }
    let hlinear = check_layer(&mut store, &input, k, h, |g, s, x| {
        let y = layer.forward(g, s, x, None)?;
        linear_functional(g, y, &wo)
    })?;

    // Distance has a kink where a point meets a centroid; redraw the
    // centroids until every pair is clearly apart.
    let (mut store, dist) = loop {
        let mut store = ParamStore::new();
        let dist = HCDist::new(&mut store, "dist", n, m, k, rng);
        let c = &store.get(dist.centroids).value;
        let closest = (0..rows)
            .flat_map(|r| (0..m).map(move |j| (r, j)))
            .map(|(r, j)| {
                let x = LorentzPoint::from_spatial(input.row(r), k);
                let y = LorentzPoint::from_spatial(&c.row(j)[1..], k);
                lorentz::distance(&x, &y).unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        if closest >= 0.1 {
            break (store, dist);
        }
    };
    let hcdist = check_layer(&mut store, &input, k, h, |g, s, x| {
        let y = dist.forward(g, s, x)?;
        linear_functional(g, y, &wd)
    })?;

    // Centroids of overlapping random subsets with random positive weights.
    let segments: Vec<Vec<usize>> =
        (0..rows).map(|r| (0..rows).filter(|&j| j == r || rng.random_bool(0.5)).collect()).collect();
    let nu = Matrix::from_vec(rows, 1, (0..rows).map(|_| rng.random_range(0.2..2.0)).collect());
    let wc = weights(rng, rows, n + 1);
    let hcent = fd_check(
        |g, x| {
            let p = ops::lift(g, x[0], k)?;
            let w = g.constant(nu.clone());
            let c = ops::centroid(g, p, segments.clone(), Some(w), k)?;
            linear_functional(g, c, &wc)
        },
        std::slice::from_ref(&input),
        h,
    )?;

    let mut store = ParamStore::new();
    let gcn = HGcn::new(HLinear::new(&mut store, "gcn", n, m, lin, rng));
    let edges: Vec<(usize, usize)> = (1..rows).map(|v| (rng.random_range(0..v), v)).collect();
    let adj = Adjacency::from_edges(rows, &edges).with_self_loops();
    let hgcn = check_layer(&mut store, &input, k, h, |g, s, x| {
        let y = gcn.forward(g, s, x, &adj, None)?;
        linear_functional(g, y, &wo)
    })?;

    let mut store = ParamStore::new();
    let embed = HEmbed::new(&mut store, "embed", n, m, k, rng);
    let hembed = {
        let by_input = fd_check(
            |g, x| {
                let y = embed.forward(g, &store, x[0])?;
                linear_functional(g, y, &wo)
            },
            std::slice::from_ref(&input),
            h,
        )?;
        let by_param = fd_check_params(
            &mut store,
            |g, s| {
                let x = g.constant(input.clone());
                let y = embed.forward(g, s, x)?;
                linear_functional(g, y, &wo)
            },
            h,
        )?;
        by_input.max(by_param)
    };

    let other = spatial_batch(rng, rows, m);
    let wcat = weights(rng, rows, n + m + 1);
    let concat = |tangent: bool| {
        fd_check(
            |g, x| {
                let (p, q) = (ops::lift(g, x[0], k)?, ops::lift(g, x[1], k)?);
                let z = if tangent {
                    ops::tangent_concat(g, &[p, q], k)?
                } else {
                    ops::direct_concat(g, &[p, q], k)?
                };
                linear_functional(g, z, &wcat)
            },
            &[input.clone(), other.clone()],
            h,
        )
    };
    Ok([hlinear, hcdist, hcent, hgcn, hembed, concat(false)?, concat(true)?])
}

fn linear_functional(g: &mut Graph, z: crate::autodiff::Tensor, w: &Matrix) -> Result<crate::autodiff::Tensor> {
    let c = g.constant(w.clone());
    let prod = g.mul(z, c)?;
    Ok(g.sum(prod))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let report = run_selftest(&SelfTestConfig { cases: 300, gradient_cases: 5, ..Default::default() }).unwrap();
        for p in &report.properties {
            assert!(p.passed(), "{p:?}");
        }
    }

    #[test]
    fn time_clamp_breaks_closure() {
        let cfg = SelfTestConfig { cases: 300, gradient_cases: 1, fault: Some(Fault::TimeClamp(1.5)), ..Default::default() };
        let report = run_selftest(&cfg).unwrap();
        assert!(!report.get("hyperboloid_closure").unwrap().passed());
        assert!(report.get("exp_log_roundtrip").unwrap().passed());
    }

    #[test]
    fn every_layer_passes_its_gradient_check() {
        for p in layer_gradient_checks(0..5, 1e-5).unwrap() {
            assert!(p.passed(), "{p:?}");
        }
    }
}
