//! Variational upper bounds for the dilute Bose gas ground-state energy.
//!
//! The crate builds Bogoliubov-type squeezed trial states over a periodic
//! box, evaluates their energy exactly as lattice sums, solves the
//! associated zero-energy two-body scattering problem by two independent
//! routes, and evaluates the universal second-order energy coefficient.
//! Every closed-form expectation value is cross-checked against a
//! brute-force truncated Fock-space oracle on tiny mode sets.

pub mod asymptotics;
pub mod error;
pub mod exec;
pub mod fock;
pub mod lattice;
pub mod potential;
pub mod quad;
pub mod scattering;
pub mod sweep;
pub mod variational;

pub use error::{Error, Result};
