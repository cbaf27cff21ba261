//! Simulation and analysis of randomized benchmarking under engineered,
//! correlated noise, with composite (dynamically corrected) pulses.
//!
//! The pipeline runs from the Clifford group ([`rotations`]) through pulse
//! compilation ([`pulses`]) and noise sampling ([`noise`]) into an exact
//! unitary simulator ([`engine`]). [`theory`] holds the random-walk
//! predictions that the simulations are checked against, [`filterfn`] the
//! frequency-domain view of the same first-order errors, and [`analysis`] the
//! estimators applied to simulated survival probabilities.

pub mod analysis;
pub mod config;
pub mod engine;
pub mod error;
pub mod filterfn;
pub mod fit;
pub mod noise;
pub mod pulses;
pub mod rotations;
pub mod theory;

pub use error::{Error, Result};
