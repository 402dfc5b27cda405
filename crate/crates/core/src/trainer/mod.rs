//! A small supervised-learning stack: synthetic datasets, a tanh MLP with
//! explicit backpropagation, momentum SGD and a scheduler-agnostic loop.

mod data;
mod mlp;
mod run;
mod sgd;
mod snapshot;

pub use data::{
    make_blobs, make_spirals, Batch, BlobsSpec, Dataset, OwnedBatch, Split, SpiralsSpec,
};
pub use mlp::{argmax, ForwardOutput, LossGrad, Mlp};
pub use run::{
    evaluate, steps_per_epoch, train_run, write_epochs_csv, write_steps_csv, EpochRecord,
    RunOutcome, RunRecord, StepRecord, TrainConfig, DIVERGENCE_LOSS,
};
pub use sgd::{sgd_step, SgdState};
pub use snapshot::ModelSnapshot;

use thiserror::Error;

use crate::scheduler::SchedulerError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
