//! Work by observation and feedforward (WOF): a simulator and analytic
//! calculator for extracting work from thermal light by homodyne measurement
//! of a split-off fraction followed by an outcome-conditioned displacement.
//!
//! Units: ħ = ω = 1, energies in quanta, temperatures as k_B T/ħω.

pub mod engine;
pub mod error;
pub mod feedforward;
pub mod montecarlo;
pub mod noise;
pub mod optimize;
pub mod phase_space;
pub mod photostatistics;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod thermo;

pub use error::{Result, WofError};
pub use photostatistics::{CoherentAmplitude, EstimateMode, Outcome, OutcomeDistribution, SplitterConfig};

/// Crate version, echoed into CSV metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
