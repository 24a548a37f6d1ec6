//! Floquet exceptional points of periodically driven or dissipated qubits.

pub mod acceptance;
pub mod analytic;
pub mod bloch;
pub mod cli;
pub mod epmetrics;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod propagator;
pub mod sweep;

pub use error::{Error, Result};
