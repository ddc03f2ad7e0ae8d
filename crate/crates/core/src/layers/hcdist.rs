use rand::RngCore;

use super::{ops, WrappedNormal};
use crate::autodiff::{Graph, ParamId, ParamKind, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::lorentz::{Curvature, LorentzPoint};

/// Maps a point of `L^n_K` to its distances from `m` trainable centroids.
#[derive(Debug, Clone)]
pub struct HCDist {
    pub in_dim: usize,
    pub out_dim: usize,
    pub curvature: Curvature,
    pub centroids: ParamId,
}

impl HCDist {
    /// Centroids start as wrapped-normal samples around the origin with
    /// variance `1/n`, so they sit at distance about 1 from it whatever the
    /// dimension.
    pub fn new<R: RngCore + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        curvature: Curvature,
        rng: &mut R,
    ) -> Self {
        let init = WrappedNormal::isotropic(LorentzPoint::origin(in_dim, curvature), 1.0 / in_dim as f64)
            .expect("positive variance");
        let centroids = init.sample_batch(rng, out_dim);
        let centroids = store.add(format!("{name}.centroids"), centroids, ParamKind::Manifold(curvature));
        Self { in_dim, out_dim, curvature, centroids }
    }

    /// `B × (n+1)` points to `B × m` distances.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let (rows, cols) = g.shape(x);
        if cols != self.in_dim + 1 {
            return Err(Error::Shape { op: "hcdist", left: (rows, cols), right: (self.out_dim, self.in_dim + 1) });
        }
        let c = g.param(store, self.centroids);
        ops::pairwise_distance(g, x, c, self.curvature)
    }
}
