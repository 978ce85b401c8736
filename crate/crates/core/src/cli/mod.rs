//! Experiment configuration and the CSV-producing runner behind the binary.

mod config;
mod run;

pub use config::{ExperimentConfig, SolverSettings, Sweep, SweepAxis};
pub use run::{coeffs_path, run, RunOptions, RunRecord, CSV_HEADER};
