//! Spin-based generative models on `N` binary variables.
//!
//! The crate covers the full chain from a dataset of configuration counts to
//! the thermodynamics of learning and retrieval:
//!
//! - [`spinspace`]: configurations, coupling vectors and the exact
//!   energy/coupling transform (a fast Walsh-Hadamard butterfly).
//! - [`dataset`]: calibration of raw counts into a standard model and the
//!   log-ratio learning rule.
//! - [`thermo`]: the contextual ensemble and its potentials (`A`, `S̃`, `Ẽ`,
//!   `C̃`, `Ã`, `G`), source fields and magnetizations.
//! - [`meanfield`]: reduced (mean-field) free energy surfaces, their
//!   stationary points, spinodals and restricted Gibbs branches.
//! - [`replica`]: the interacting-replica model solved exactly by sector sums.
//! - [`montecarlo`]: Metropolis kinetics of the replica model and
//!   autocorrelation / escape-time diagnostics.
//! - [`coexistence`]: true/false state spectra treated as two phases.
//! - [`correlations`]: quadratic expansion of the learning potential with
//!   correlated weight fluctuations.

pub mod coexistence;
pub mod correlations;
pub mod dataset;
mod error;
pub mod meanfield;
pub mod montecarlo;
pub mod numerics;
pub mod replica;
pub mod spinspace;
pub mod thermo;

pub use error::{Error, ErrorKind, Result};
