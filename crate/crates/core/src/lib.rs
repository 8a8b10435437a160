//! Weak-valued correlation functions.
//!
//! Simulates the readout of two-point correlation functions as weak values:
//! a perturbed harmonic oscillator probed by a qubit pointer through an
//! impulsive `Ĝ⊗σ_y` coupling, finite-copy Monte Carlo of that readout, and a
//! (1+1)-d lattice φ⁴ theory read out through polar decomposition and
//! detection-probability variations.
//!
//! Units: ħ = 1; times and frequencies are dimensionless.

// Guards are written `!(x > tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod linops;
pub mod phi4;
pub mod pqho;
pub mod shots;
pub mod weakmeas;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Result, WvcfError};
pub use linops::{Complex64, Operator, StateVector};
