//! S-matrix poles of one-dimensional potentials from Siegert boundary
//! conditions, pole-only reconstructions of the transmission probability, and
//! the local single-pole resonance profiles built from them.

pub mod error;
pub mod potentials;
mod propagate;
pub mod scatter;

pub use error::{Error, Result};
pub use potentials::{Potential, Symmetry};
pub use propagate::Scaled;
pub mod poles;
pub mod expansion;
pub mod profiles;
pub mod tracker;
pub mod experiments;
