//! Multimode quantum Rabi model of a Cooper-pair box coupled to an open
//! quarter-wave transmission-line resonator, built from five lumped circuit
//! parameters.
//!
//! The pipeline runs [`circuit`] (Foster network, capacitance algebra and
//! M-dependent parameters) → [`cpb`] (bare atom) → [`bogoliubov`] (normal
//! modes when C_J > 0) → [`hamiltonian`] (sparse atom ⊗ Fock matrix) →
//! [`eigen`] (lowest eigenpairs, dressed labels) → [`analysis`].

pub mod analysis;
pub mod bogoliubov;
pub mod checks;
pub mod circuit;
pub mod commands;
pub mod config;
pub mod constants;
pub mod cpb;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod hamiltonian;
mod nonsym;

pub use error::{Error, Result};
pub use exec::Execution;
