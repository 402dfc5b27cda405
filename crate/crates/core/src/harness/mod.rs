//! Experiment orchestration: configuration, multi-seed runs, aggregation and
//! CSV reports.

pub mod config;
pub mod experiment;
pub mod report;
pub mod sweep;

pub use config::{parse_config, ConfigError, ExperimentConfig, SchedulerEntry, TaskData};
pub use experiment::{build_task, run_experiment, run_single, Experiment, RunResult, Task};
pub use report::{aggregate, emit_report, read_runs_csv, AggregateReport, RunSummary};
pub use sweep::{sweep_w, write_sweep, Sweep, SweepRow, DEFAULT_W_VALUES};

use thiserror::Error;

use crate::hessian::HessianError;
use crate::scheduler::SchedulerError;
use crate::trace_sim::TraceError;
use crate::trainer::TrainError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Hessian(#[from] HessianError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io(_) => 3,
            HarnessError::Train(TrainError::Io(_)) => 3,
            HarnessError::Hessian(HessianError::Io(_)) => 3,
            HarnessError::Trace(TraceError::Io(_)) => 3,
            _ => 1,
        }
    }
}

/// Exit code for a run that completed but had a diverged member.
pub const EXIT_DIVERGED: i32 = 2;
