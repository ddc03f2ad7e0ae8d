//! One module per subcommand. Each exposes a configuration type with scale
//! presets and an `execute` function writing into a [`crate::output::RunDir`].

pub mod depth;
pub mod distance;
pub mod selftest;
pub mod surface;
pub mod toy2d;
pub mod tree_gen;

use haegan::autodiff::{Graph, Tensor};
use haegan::layers::ops;
use haegan::{Curvature, LorentzPoint};
use serde::{Deserialize, Serialize};

/// The two ways of concatenating Lorentz points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcatMethod {
    Direct,
    Tangent,
}

impl ConcatMethod {
    pub const BOTH: [ConcatMethod; 2] = [ConcatMethod::Direct, ConcatMethod::Tangent];

    pub fn name(self) -> &'static str {
        match self {
            ConcatMethod::Direct => "direct",
            ConcatMethod::Tangent => "tangent",
        }
    }

    pub fn apply(self, g: &mut Graph, parts: &[Tensor], k: Curvature) -> haegan::Result<Tensor> {
        match self {
            ConcatMethod::Direct => ops::direct_concat(g, parts, k),
            ConcatMethod::Tangent => ops::tangent_concat(g, parts, k),
        }
    }

    pub fn apply_points(self, parts: &[LorentzPoint]) -> haegan::Result<LorentzPoint> {
        Ok(match self {
            ConcatMethod::Direct => haegan::lorentz::direct_concat(parts)?,
            ConcatMethod::Tangent => haegan::lorentz::tangent_concat(parts)?,
        })
    }
}
