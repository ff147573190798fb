//! Bubble-tower constructions for 2x2 singular Liouville systems on the
//! unit disc.
//!
//! The crate evaluates the explicit family of blow-up profiles built by
//! stacking alternating-component bubbles at nested concentration
//! scales: the polynomial layer fixing the admissible exponents and
//! masses ([`spectrum`], [`masses`]), the linear system fixing the
//! scales ([`scales`]), the profile itself with its discrepancy and
//! residual ([`tower`]), quadrature-backed checks of the predicted
//! integrals ([`quad`]), the kernel classification of the linearized
//! single-bubble operator ([`kernel`]), and a damped Newton corrector
//! that turns the profile into a true radial solution ([`newton`]).

pub mod cli;
pub mod error;
pub mod kernel;
pub mod logdomain;
pub mod masses;
pub mod newton;
pub mod quad;
pub mod scales;
pub mod spectrum;
pub mod tower;

pub use error::{Error, Result};
pub use masses::MassPair;
pub use scales::{LambdaPair, ScaleSet};
pub use spectrum::{BetaSequence, KMax, SystemParams};
pub use tower::TowerProfile;
