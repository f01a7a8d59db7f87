//! Numerical laboratory for oscillating potentials on the line and on radial
//! channels: explicit embedded-eigenvalue constructions, finite-box operator
//! realizations, and limiting-absorption / commutator diagnostics.

pub mod construct;
pub mod discretize;
pub mod error;
pub mod grid;
pub mod lap;
pub mod linalg;
pub mod potentials;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};
