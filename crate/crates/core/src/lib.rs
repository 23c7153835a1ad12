//! Simulation and analysis of a quantum-secured optical link based on
//! induced coherence, with a classical eavesdropper and jammer.

pub mod analysis;
pub mod count_engine;
mod error;
pub mod link_model;
pub mod protocol_codec;

pub use error::{Error, Result};
