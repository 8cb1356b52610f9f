//! Radially symmetric vortex profiles for a mean-field rotor model with a
//! smooth long-range interaction, plus a lattice Monte Carlo companion.

pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
pub mod kernel;
pub mod lattice;
pub mod meanfield;
pub mod norms;
pub mod operator;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};
