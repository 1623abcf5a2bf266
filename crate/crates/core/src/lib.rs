//! Dark state adiabatic passage across a chain of three spin-one particles.
//!
//! The crate builds the time-dependent chain Hamiltonian, diagonalizes and
//! tracks its spectrum, propagates states under counter-intuitive and
//! magic-angle dipolar schedules, and measures transfer fidelities.

pub mod config;
pub mod dipole;
pub mod error;
pub mod evolution;
pub mod hamiltonian;
mod linalg;
pub mod output;
pub mod runner;
pub mod spectral;
pub mod spin;

pub use error::{Error, Result};
