//! Finite-dimensional repeated-interaction quantum systems.
//!
//! A small system with Hamiltonian `h_S` interacts, for a duration `tau` each,
//! with a sequence of identical chain elements (Hamiltonian `h_E`, thermal state
//! at inverse temperature `beta`) through the coupling `lambda * v`. This crate
//! computes the exact reduced dynamics in the Heisenberg picture, the two
//! weak-coupling effective generators (vanishing coupling, vanishing interaction
//! time), and the asymptotic states of both, together with the closed forms of
//! the two-spin model used as an analytic oracle.
//!
//! Module map:
//!
//! * [`linop`]: dense complex matrices, superoperators, exponentials,
//!   logarithms, spectral projections and Choi matrices.
//! * [`ris`]: the model, its conditional expectation, exact evolutions,
//!   Dyson terms and the parity hypothesis check.
//! * [`vanhove`]: spectral averaging, effective generators and the
//!   convergence sweeps.
//! * [`asymptotics`]: peripheral spectra, limit projections, periodic
//!   asymptotic states and perturbation-structure checks.
//! * [`spin`]: the two-spin model and its closed forms.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod linop;
pub mod ris;
pub mod spin;
pub mod vanhove;

pub use error::{Error, Result};
pub use linop::{ComplexMatrix, Superoperator};
pub use ris::{ChainState, RISModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
