//! Riemannian Adam over a [`ParamStore`] holding both Euclidean and manifold
//! parameters.
//!
//! Euclidean parameters follow standard Adam with bias correction. For a
//! manifold parameter every row is a point `x` on the hyperboloid and is
//! updated as follows:
//!
//! 1. `g = grad_R f(x)`, the Riemannian gradient of the stored Euclidean
//!    gradient.
//! 2. `m ← β1 m + (1 - β1) g` and `u ← β2 u + (1 - β2) <g, g>_L`, where `u` is
//!    one scalar per row.
//! 3. `x' = exp_x(-lr m̂ / (sqrt(û) + ε))` with bias-corrected `m̂`, `û`.
//! 4. `m ← PT_{x→x'}(m)` so the first moment stays tangent at the new point.

use crate::autodiff::{riemannian_grad_rows, ParamKind, ParamStore};
use crate::error::{Error, Result};
use crate::lorentz::{self, LorentzPoint};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self { lr, beta1, beta2, ..Self::default() }
    }
}

/// Multiplies the learning rate by `gamma` every `step_size` optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLr {
    pub step_size: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
struct Moments {
    m: Matrix,
    u: Matrix,
}

#[derive(Debug, Clone)]
pub struct RiemannianAdam {
    config: AdamConfig,
    schedule: Option<StepLr>,
    lr: f64,
    t: usize,
    moments: Vec<Moments>,
}

impl RiemannianAdam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, schedule: None, lr: config.lr, t: 0, moments: Vec::new() }
    }

    pub fn with_schedule(mut self, schedule: StepLr) -> Self {
        self.schedule = Some(schedule);
        self
    }

    /// The learning rate the next step will use.
    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.t
    }

    fn init_moments(&mut self, store: &ParamStore) {
        if self.moments.len() == store.len() {
            return;
        }
        self.moments = store
            .iter()
            .map(|p| {
                let u_cols = match p.kind {
                    ParamKind::Euclidean => p.value.cols(),
                    ParamKind::Manifold(_) => 1,
                };
                Moments { m: Matrix::zeros(p.value.rows(), p.value.cols()), u: Matrix::zeros(p.value.rows(), u_cols) }
            })
            .collect();
    }

    /// Applies one update from the gradients currently held in `store`.
    /// Gradients are left in place; call [`ParamStore::zero_grad`] before the
    /// next accumulation.
    ///
    /// A non-finite gradient aborts the step before any parameter changes.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        if let Some(p) = store.iter().find(|p| !p.grad.all_finite()) {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
        self.init_moments(store);
        self.t += 1;
        let AdamConfig { beta1, beta2, eps, .. } = self.config;
        let lr = self.lr;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (p, st) in store.iter_mut().zip(&mut self.moments) {
            match p.kind {
                ParamKind::Euclidean => {
                    let x = p.value.data_mut();
                    let g = p.grad.data();
                    let m = st.m.data_mut();
                    let u = st.u.data_mut();
                    for i in 0..x.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        u[i] = beta2 * u[i] + (1.0 - beta2) * g[i] * g[i];
                        let mh = m[i] / bc1;
                        let uh = u[i] / bc2;
                        x[i] -= lr * mh / (uh.sqrt() + eps);
                    }
                }
                ParamKind::Manifold(k) => {
                    let rg = riemannian_grad_rows(&p.value, &p.grad, k);
                    for r in 0..p.value.rows() {
                        let x = LorentzPoint::from_spatial(&p.value.row(r)[1..], k);
                        let g = rg.row(r);
                        let m = st.m.row_mut(r);
                        for (mi, gi) in m.iter_mut().zip(g) {
                            *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        }
                        let gg = lorentz::lorentz_inner_unchecked(g, g).max(0.0);
                        let u = &mut st.u.row_mut(r)[0];
                        *u = beta2 * *u + (1.0 - beta2) * gg;
                        let denom = (*u / bc2).sqrt() + eps;
                        let dir: Vec<f64> = m.iter().map(|mi| -lr * (mi / bc1) / denom).collect();
                        let x_new = lorentz::exp_map_unchecked(&x, &dir);
                        let moved = lorentz::parallel_transport_unchecked(&x, &x_new, m);
                        m.copy_from_slice(moved.components());
                        p.value.row_mut(r).copy_from_slice(x_new.coords());
                    }
                }
            }
        }
        if let Some(s) = self.schedule {
            if s.step_size > 0 && self.t.is_multiple_of(s.step_size) {
                self.lr *= s.gamma;
            }
        }
        Ok(())
    }
}

/// Plain Riemannian gradient descent: `x ← exp_x(-lr grad_R f(x))`.
#[derive(Debug, Clone, Copy)]
pub struct RiemannianSgd {
    pub lr: f64,
}

impl RiemannianSgd {
    pub fn step(&self, store: &mut ParamStore) -> Result<()> {
        if let Some(p) = store.iter().find(|p| !p.grad.all_finite()) {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
        for p in store.iter_mut() {
            match p.kind {
                ParamKind::Euclidean => {
                    for (x, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
                        *x -= self.lr * g;
                    }
                }
                ParamKind::Manifold(k) => {
                    let rg = riemannian_grad_rows(&p.value, &p.grad, k);
                    for r in 0..p.value.rows() {
                        let x = LorentzPoint::from_spatial(&p.value.row(r)[1..], k);
                        let dir: Vec<f64> = rg.row(r).iter().map(|g| -self.lr * g).collect();
                        let x_new = lorentz::exp_map_unchecked(&x, &dir);
                        p.value.row_mut(r).copy_from_slice(x_new.coords());
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_branch_matches_hand_stepped_adam() {
        let mut store = ParamStore::new();
        let id = store.add("w", Matrix::row_vector(&[0.5, -1.0]), ParamKind::Euclidean);
        let cfg = AdamConfig::new(0.1, 0.9, 0.999);
        let mut opt = RiemannianAdam::new(cfg);
        let grads = [[0.2, -0.4], [0.1, 0.3], [-0.5, 0.05]];

        let mut x = [0.5f64, -1.0];
        let (mut m, mut u) = ([0.0f64; 2], [0.0f64; 2]);
        for (t, g) in grads.iter().enumerate() {
            store.get_mut(id).grad = Matrix::row_vector(g);
            opt.step(&mut store).unwrap();
            let t = (t + 1) as i32;
            for i in 0..2 {
                m[i] = 0.9 * m[i] + 0.1 * g[i];
                u[i] = 0.999 * u[i] + 0.001 * g[i] * g[i];
                let mh = m[i] / (1.0 - 0.9f64.powi(t));
                let uh = u[i] / (1.0 - 0.999f64.powi(t));
                x[i] -= 0.1 * mh / (uh.sqrt() + 1e-8);
            }
            for i in 0..2 {
                assert!((store.get(id).value.data()[i] - x[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let k = crate::lorentz::Curvature::default();
        let mut store = ParamStore::new();
        let p = LorentzPoint::from_spatial(&[0.3, -0.7], k);
        let a = store.add("a", Matrix::row_vector(p.coords()), ParamKind::Manifold(k));
        let b = store.add("b", Matrix::row_vector(&[1.0, 2.0]), ParamKind::Euclidean);
        let before = (store.get(a).value.clone(), store.get(b).value.clone());
        let mut opt = RiemannianAdam::new(AdamConfig::default());
        for _ in 0..3 {
            opt.step(&mut store).unwrap();
        }
        assert_eq!(store.get(a).value, before.0);
        assert_eq!(store.get(b).value, before.1);
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut store = ParamStore::new();
        let id = store.add("layer.weight", Matrix::row_vector(&[1.0]), ParamKind::Euclidean);
        store.get_mut(id).grad = Matrix::row_vector(&[f64::NAN]);
        let err = RiemannianAdam::new(AdamConfig::default()).step(&mut store).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient(ref n) if n == "layer.weight"));
        assert_eq!(store.get(id).value.data(), &[1.0]);
    }

    #[test]
    fn step_schedule_halves_at_boundary() {
        let mut store = ParamStore::new();
        store.add("w", Matrix::row_vector(&[1.0]), ParamKind::Euclidean);
        let mut opt = RiemannianAdam::new(AdamConfig::new(0.2, 0.0, 0.9)).with_schedule(StepLr { step_size: 10, gamma: 0.5 });
        for _ in 0..9 {
            opt.step(&mut store).unwrap();
        }
        assert_eq!(opt.lr(), 0.2);
        opt.step(&mut store).unwrap();
        assert_eq!(opt.lr(), 0.1);
        for _ in 0..10 {
            opt.step(&mut store).unwrap();
        }
        assert_eq!(opt.lr(), 0.2 * 0.5 * 0.5);
    }
}
