//! Seeded Monte Carlo experiments over the full pipeline.
//!
//! A trial is fully determined by `(config, trial_index)`; trials run in
//! parallel and are aggregated in trial order, so outputs do not depend on
//! the worker count.

mod config;
mod experiment;
mod probe;
mod trial;

use thiserror::Error;

pub use config::{load_config, Cell, ExperimentConfig, RowCount};
pub use experiment::{
    run_experiment, summarize, wilson_interval, write_outputs, write_summary_csv,
    write_trials_jsonl, ExperimentOutput, RunOptions, SummaryRow, SUMMARY_CAPACITY_TOLERANCE,
    SUMMARY_HEADER,
};
pub use probe::{
    capacity_table, collision_probe, write_capacity_csv, write_probe_csv, CapacityRow, ProbeRow,
};
pub use trial::{
    run_trial, TrialDetection, TrialRecord, TrialSeeds, STAGE_DATABASE, STAGE_PATTERN,
    STAGE_PERMUTATION,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("trial {trial}: {message}")]
    Trial { trial: u64, message: String },
    #[error("trial {trial}: invariant violated: {message}")]
    Invariant { trial: u64, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) | HarnessError::Validation { .. } => 2,
            _ => 3,
        }
    }
}
