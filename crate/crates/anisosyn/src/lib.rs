//! Anisotropic-norm analysis and static output-feedback synthesis for
//! discrete-time LTI systems.
//!
//! The crate computes H2, H∞, mean-anisotropy and a-anisotropic norms of
//! discrete-time systems, certifies a-anisotropic norm bounds of a closed
//! loop under a static output-feedback gain, and synthesizes such gains by a
//! pair of projected LMIs coupled through bilinear equalities, resolved with
//! a cone-complementarity linearization iteration.

extern crate openblas_src;

pub mod analysis;
pub mod casestudy;
mod error;
pub mod linalg;
pub mod lti;
pub mod norms;
pub mod sdp;
pub mod synthesis;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;

#[cfg(test)]
pub(crate) mod test_util;
