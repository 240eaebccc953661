//! Exact multi-time observable correlators in closed chaotic quantum systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensorops`]: dense operator algebra, Hermitian eigendecomposition and
//!   Heisenberg-picture propagation.
//! - [`models`]: the system-bath spin chain, the Deutsch random-matrix model and
//!   initial states.
//! - [`chaoswf`]: coarse-grained chaotic wave-function profiles, their
//!   Lorentzian/Gaussian fits and the decay kernel `Ω(t)`.
//! - [`correlators`]: exact one-, two-, four-point series, OTOCs and squared
//!   commutators evaluated in the energy eigenbasis.
//! - [`predictions`]: the analytic envelopes built from powers of `Ω(t)`.
//! - [`rmtlab`]: ensemble experiments on the Deutsch model and the closed-form
//!   eigenstate correlation functions.
//!
//! Data-parallel loops (time grids, realizations, profile accumulation) go
//! through [`exec`], which uses rayon when the `parallel` feature is enabled
//! and falls back to plain iteration otherwise. Results are bit-identical
//! either way.

pub mod chaoswf;
pub mod correlators;
mod error;
pub mod exec;
pub mod models;
pub mod output;
pub mod predictions;
pub mod rmtlab;
pub mod tensorops;

pub use error::{Error, Result};
/// Re-exported so callers can build and read [`tensorops::Dense`] matrices.
pub use faer;

/// Double precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;
