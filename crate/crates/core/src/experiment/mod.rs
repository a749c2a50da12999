//! Configured batch experiments: parsing, catalog and execution.

pub mod catalog;
pub mod config;
pub mod run;

pub use catalog::{describe, list, ExperimentKind, KeyDoc};
pub use config::ExperimentConfig;
pub use run::{execute, run_experiment, write_outputs, PolicyRun, RunOutput, SummaryRecord};
