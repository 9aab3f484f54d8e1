//! Reconstruction of complex signals from the squared magnitudes of their
//! frame coefficients.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: complex vectors and the realification `ι : ℂⁿ → ℝ²ⁿ`.
//! - [`symops`]: self-adjoint operators, the cones `S^{p,q}`, the `τ` map.
//! - [`frames`]: frame construction and the realified measurement operators.
//! - [`measurement`]: the analysis map `α`, its linearisation `𝒜`, AWGN.
//! - [`analysis`]: injectivity diagnostics and Lipschitz constants.
//! - [`crlb`]: Fisher information and the Cramér-Rao lower bound.
//! - [`irls`]: the iterative regularized least-squares solver.

pub mod analysis;
pub mod crlb;
mod error;
pub mod frames;
pub mod hilbert;
pub mod irls;
pub mod measurement;
pub mod rng;
pub mod symops;

pub use error::{Error, Result};
pub use frames::Frame;
pub use hilbert::{ComplexVector, RealifiedVector};
pub use measurement::MeasurementVector;
pub use symops::{RealSymOperator, SymOperator};

pub use num_complex::Complex64;
