//! Numerical laboratory for residual-network loss landscapes.
//!
//! The crate provides dense linear algebra over a generic scalar
//! (`f32`/`f64`), orthogonal-projection utilities, a residual network
//! model with closed-form gradients, convex comparison oracles for the
//! induced linear problems, and a training/certification harness that
//! checks the landscape identities the model is supposed to satisfy.

pub mod error;
pub mod landscape;
pub mod loss;
pub mod mat;
pub mod model;
pub mod oracle;
pub mod projection;
pub mod rng;
pub mod scalar;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use mat::Mat;
pub use scalar::Scalar;

/// Default-precision dense matrix.
pub type Matrix = Mat<f64>;
/// Single-precision dense matrix.
pub type Matrix32 = Mat<f32>;
