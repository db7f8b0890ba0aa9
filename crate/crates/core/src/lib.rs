//! Proper scoring rules for probabilistic forecasts, the divergences they
//! induce, and numerical checks of how those divergences treat over- and
//! under-dispersed or shifted forecasts.

pub mod asymmetry;
pub mod divergence;
pub mod error;
pub mod families;
pub mod forecasts;
pub mod harness;
pub mod hedging;
pub mod optimize;
pub mod quad;
pub mod scoring;
pub mod selftest;
pub mod special;

pub use error::{Error, Rejection, Result};
pub use families::expfam::{expfam_descriptor, ExpFam, ExpFamKind, Omega};
pub use families::{make_family, Distribution, Law, LocationFamily, ScaleFamily, Shape, Support};
pub use forecasts::{affine_to, Ensemble, Forecast, Mixture};
