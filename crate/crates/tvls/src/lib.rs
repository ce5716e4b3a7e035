//! File formats, experiment harness and command-line plumbing around
//! `tvls-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod phase;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentResults, ExperimentSpec};
pub use phase::{phase_transition, PhaseSpec};


/// Library version stamped into every output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
