//! Experiment runner behind the `sdlps` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

pub use commands::{emit_plotdata, pool, run, run_sweep, Overrides, PlotRow, Pooled, SweepSeries};
pub use config::{ExperimentConfig, LoadedConfig, Mode};
pub use error::CliError;
pub use output::{write_artifacts, Artifact};
