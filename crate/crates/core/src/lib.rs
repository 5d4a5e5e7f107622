//! Blow-ups of Radon measures at desk scale.
//!
//! Radon measures on `R^d` are represented by finite atomic proxies confined to
//! a world window. On top of that representation the crate provides
//!
//! * the bounded-Lipschitz distances `F_a` and the summed metric `d`, computed
//!   exactly as linear programs ([`metric`]);
//! * triadic cube filtrations and the blow-up maps `T_{x,r}` ([`triadic`],
//!   [`blowup`]);
//! * the dense approximants `mu_k` together with per-cube membership
//!   certificates ([`typical`]);
//! * Borel–Cantelli bounds and central-cube event systems ([`limsup`]);
//! * the search for a point where the Heaviside measure is not tangent
//!   ([`sharpness`]);
//! * measures on symbolic trees, their metric, zooming and micromeasures
//!   ([`tree`]).

pub mod blowup;
pub mod error;
pub mod limsup;
pub mod line;
pub mod lp;
pub mod measure;
pub mod metric;
pub mod sharpness;
pub mod tree;
pub mod triadic;
pub mod typical;

pub use error::{Error, Result};
pub use measure::{AtomicMeasure, AxisBox};
pub use triadic::CubeId;
