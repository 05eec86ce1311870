//! Experiment drivers behind the `ahs` command: control expectations,
//! translation heatmaps, crosstalk sweeps and moving-target-defense runs.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::execute;
pub use config::{ExperimentConfig, ExperimentKind, Resolved};
pub use error::ExperimentError;
