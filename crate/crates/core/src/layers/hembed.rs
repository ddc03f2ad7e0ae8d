use rand::RngCore;

use super::{ops, scaled_normal};
use crate::autodiff::{Graph, ParamId, ParamKind, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::lorentz::Curvature;

/// Trainable Euclidean embedding followed by the map to the hyperboloid:
/// `x ↦ e2h(W x)`.
#[derive(Debug, Clone)]
pub struct HEmbed {
    pub in_dim: usize,
    pub out_dim: usize,
    pub curvature: Curvature,
    /// `out_dim × in_dim`; a one-hot input selects a column.
    pub weight: ParamId,
}

impl HEmbed {
    pub fn new<R: RngCore + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        curvature: Curvature,
        rng: &mut R,
    ) -> Self {
        let weight = store.add(format!("{name}.weight"), scaled_normal(rng, out_dim, in_dim, in_dim), ParamKind::Euclidean);
        Self { in_dim, out_dim, curvature, weight }
    }

    /// `B × in_dim` Euclidean rows to `B × (out_dim+1)` points.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let (rows, cols) = g.shape(x);
        if cols != self.in_dim {
            return Err(Error::Shape { op: "hembed", left: (rows, cols), right: (self.out_dim, self.in_dim) });
        }
        let w = g.param(store, self.weight);
        let t = g.matmul_t(x, w)?;
        ops::e2h(g, t, self.curvature)
    }
}
