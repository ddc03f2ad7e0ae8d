//! Fully hyperbolic layers operating on batches of Lorentz points.

mod hcdist;
mod hembed;
mod hgcn;
mod hlinear;
pub mod ops;
mod weights;
mod wrapped;

pub use hcdist::HCDist;
pub use hembed::HEmbed;
pub use hgcn::{Adjacency, HGcn};
pub use hlinear::{Activation, HLinear, HLinearConfig};
pub use ops::centroid as hcent_aggregate;
pub use weights::{load_weights, load_weights_into, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use wrapped::WrappedNormal;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::matrix::Matrix;

/// Entries drawn from `N(0, 1/fan_in)`.
pub(crate) fn scaled_normal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, fan_in: usize) -> Matrix {
    let std = 1.0 / (fan_in as f64).sqrt();
    let data = (0..rows * cols).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Inverted-dropout mask: entries are `0` with probability `p`, else
/// `1/(1-p)`.
pub(crate) fn dropout_mask<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, p: f64) -> Matrix {
    let keep = 1.0 / (1.0 - p);
    let data = (0..rows * cols).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Shortens an optional RNG borrow so it can be passed on repeatedly.
pub fn reborrow<'a>(rng: &'a mut Option<&mut dyn RngCore>) -> Option<&'a mut dyn RngCore> {
    match rng {
        Some(r) => Some(&mut **r),
        None => None,
    }
}
