//! Verification of certificates for nonlocal games played with noisy maximally
//! entangled states.
//!
//! The crate is organized bottom-up:
//!
//! - [`qudit_algebra`]: Fourier analysis of operators on `D` qudits, plus dense
//!   synthesis and spectral helpers.
//! - [`correlation`]: noisy maximally entangled states and their aligned bases.
//! - [`prg`]: finite-field k-wise uniform families and the block combiner.
//! - [`psd_tester`]: the deterministic positivity tester.
//! - [`game_verifier`]: games, fixed-point certificates and the verifier.
//! - [`prover_tools`]: smoothing, truncation, POVM rounding and brute-force values.
//! - [`validation`]: exhaustive property checks (hypercontractivity, invariance,
//!   derandomization) and the self-test suite.

pub mod correlation;
pub mod dense;
pub mod error;
pub mod formats;
pub mod game_verifier;
pub mod prg;
pub mod prover_tools;
pub mod psd_tester;
pub mod qudit_algebra;
pub mod validation;

pub use dense::{DenseBudget, DenseHermitian};
pub use error::{Error, Result};
pub use qudit_algebra::{FourierOperator, MultiIndex, StandardBasis};
