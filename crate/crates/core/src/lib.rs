//! Simulation of molecule-atom Rydberg gates: Hilbert-space construction,
//! dipolar couplings, pulse shaping, master-equation dynamics and gate
//! analysis.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod gates;
pub mod hilbert;
pub mod interactions;
pub mod model;
pub mod pulses;

pub use error::{Error, Result};
