//! Hyperbolic deep learning in the Lorentz model.
//!
//! * [`lorentz`]: points, tangent vectors and the closed-form geometry.
//! * [`autodiff`]: a reverse-mode tape with a forward-mode pass used for
//!   gradient penalties.
//! * [`layers`]: fully hyperbolic layers (linear, centroid distance,
//!   centroid aggregation, graph convolution, embeddings) and the wrapped
//!   normal sampler.
//! * [`optim`]: Riemannian Adam with a step learning-rate schedule.
//! * [`wgan`]: a Wasserstein GAN with geodesic gradient penalty.
//! * [`tree`]: random trees, a tree autoencoder and the latent GAN pipeline.
//! * [`metrics`]: degree MMD and centrality comparisons between tree sets.
//! * [`selftest`]: randomized checks of the geometry and gradients.

pub mod matrix;
pub mod lorentz;
pub mod autodiff;
pub mod error;
pub mod layers;
pub mod optim;
pub mod toy;
pub mod wgan;
pub mod tree;
pub mod metrics;
pub mod selftest;

pub use error::{Error, Result};

pub use lorentz::{Curvature, GeometryError, LorentzPoint, TangentVector};
pub use matrix::Matrix;
