use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{dropout_mask, ops, scaled_normal};
use crate::autodiff::{Graph, ParamId, ParamKind, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::lorentz::Curvature;
use crate::matrix::Matrix;

/// Smallest accepted norm of the pre-normalization product.
const MIN_DIRECTION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HLinearConfig {
    pub bias: bool,
    pub activation: Activation,
    /// Dropout probability applied to `W τ(x) + b` in training mode.
    pub dropout: f64,
    pub curvature: Curvature,
    /// Initial value of the range scale `λ`.
    pub init_range: f64,
}

impl Default for HLinearConfig {
    fn default() -> Self {
        Self { bias: true, activation: Activation::Identity, dropout: 0.0, curvature: Curvature::default(), init_range: 1.0 }
    }
}

/// Hyperbolic linear layer `L^n_K -> L^m_K`.
///
/// The spatial output is `λ σ(v·x + b') / |W τ(x) + b| · (W τ(x) + b)` with
/// `λ = exp(ρ)`; the time component is lifted from it, so outputs lie on the
/// hyperboloid and have spatial norm exactly `λ σ(v·x + b')`.
#[derive(Debug, Clone)]
pub struct HLinear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub config: HLinearConfig,
    pub weight: ParamId,
    pub scale_dir: ParamId,
    pub bias: Option<ParamId>,
    pub scale_bias: Option<ParamId>,
    pub log_range: ParamId,
}

impl HLinear {
    /// Registers the parameters under `name.*`. Weights start from
    /// `N(0, 1/(n+1))`, `v` at `e_0`, biases at 0
    /// and `λ` at `config.init_range`.
    pub fn new<R: RngCore + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        config: HLinearConfig,
        rng: &mut R,
    ) -> Self {
        let fan_in = in_dim + 1;
        let weight = store.add(format!("{name}.weight"), scaled_normal(rng, out_dim, fan_in, fan_in), ParamKind::Euclidean);
        // `v = e_0`: the gate starts as `σ(x_t + b')`, which depends only on the
        // distance from the origin and stays finite and non-zero for far-away
        // inputs such as high-dimensional wrapped-normal noise.
        let mut v = Matrix::zeros(1, fan_in);
        v.set(0, 0, 1.0);
        let scale_dir = store.add(format!("{name}.scale_dir"), v, ParamKind::Euclidean);
        let (bias, scale_bias) = if config.bias {
            (
                Some(store.add(format!("{name}.bias"), Matrix::zeros(1, out_dim), ParamKind::Euclidean)),
                Some(store.add(format!("{name}.scale_bias"), Matrix::zeros(1, 1), ParamKind::Euclidean)),
            )
        } else {
            (None, None)
        };
        let log_range = store.add(format!("{name}.log_range"), Matrix::scalar(config.init_range.ln()), ParamKind::Euclidean);
        Self { in_dim, out_dim, config, weight, scale_dir, bias, scale_bias, log_range }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.weight, self.scale_dir];
        ids.extend(self.bias);
        ids.extend(self.scale_bias);
        ids.push(self.log_range);
        ids
    }

    /// Applies the layer to a `B × (n+1)` batch. Dropout is active only when
    /// `rng` is given.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: Tensor,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<Tensor> {
        let (rows, cols) = g.shape(x);
        if cols != self.in_dim + 1 {
            return Err(Error::Shape { op: "hlinear", left: (rows, cols), right: (self.out_dim, self.in_dim + 1) });
        }
        let k = self.config.curvature;
        let w = g.param(store, self.weight);
        let v = g.param(store, self.scale_dir);
        let tx = match self.config.activation {
            Activation::Identity => x,
            Activation::Relu => g.relu(x),
        };
        let mut u = g.matmul_t(tx, w)?;
        if let Some(b) = self.bias {
            let b = g.param(store, b);
            u = g.add_row(u, b)?;
        }
        if let Some(rng) = rng {
            if self.config.dropout > 0.0 {
                let mask = dropout_mask(rng, rows, self.out_dim, self.config.dropout);
                u = g.mul_const(u, mask)?;
            }
        }
        let norm = g.row_norm(u);
        let smallest = g.value(norm).data().iter().cloned().fold(f64::INFINITY, f64::min);
        if !(smallest >= MIN_DIRECTION_NORM) {
            return Err(Error::Degenerate(format!("hyperbolic linear direction has norm {smallest:e}")));
        }
        let mut s = g.matmul_t(x, v)?;
        if let Some(bp) = self.scale_bias {
            let bp = g.param(store, bp);
            s = g.add_row(s, bp)?;
        }
        let gate = g.sigmoid(s);
        let rho = g.param(store, self.log_range);
        let lambda = g.exp(rho);
        let radius = g.mul_scalar(gate, lambda)?;
        let coef = g.div(radius, norm)?;
        let h = g.mul_col(u, coef)?;
        ops::lift(g, h, k)
    }
}
