//! Experiment orchestration for learning agents on hidden rules: configs
//! and presets, resumable parallel runs, metric artifacts and the probes
//! behind the `gohr` command.

pub mod config;
pub mod probes;
pub mod report;
pub mod runner;

use std::path::Path;

use thiserror::Error;

pub use config::{preset, AgentEntry, Cell, Comparison, ExperimentConfig, SeedScope};
pub use report::{build_report, write_metrics, GroupReport, MetricsReport, PairTest, RuleStats};
pub use runner::{load_summaries, output_root, run_experiment, CellSummary, ExperimentOutcome, RunOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Rule { path: String, source: gohr_core::rule::ParseError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("run failed: {0}")]
    Run(String),
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Short machine-readable kind for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Rule { .. } => "rule",
            HarnessError::Io { .. } => "io",
            HarnessError::Run(_) => "run",
        }
    }
}
