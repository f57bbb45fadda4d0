//! Ray-transport propagation of oscillatory states `a e^{iφ/h}` on the Bolza
//! surface, and statistical checks of how their local rescalings compare with
//! isotropic Gaussian waves.
//!
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod lagrangian;
pub mod quad;
pub mod stats;
pub mod waves;
pub mod wkb;

pub use error::{Error, Result};
