use rayon::prelude::*;

use super::config::{ExperimentConfig, SchedulerEntry, TaskConfig, TaskData};
use super::report::{aggregate, AggregateReport, RunSummary};
use super::HarnessError;
use crate::hessian::{EigenEstimate, HessianProbe, MlpLoss};
use crate::rng::derive_seed;
use crate::trainer::{
    make_blobs, make_spirals, train_run, Dataset, Mlp, RunOutcome, Split,
};

const SHUFFLE_TAG: u64 = 0x7368_7566;

/// Datasets and network shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Task {
    pub model: Mlp,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn build_task(cfg: &TaskConfig) -> Result<Task, HarnessError> {
    let (train, test) = match &cfg.data {
        TaskData::Blobs(b) => (make_blobs(b, Split::Train)?, make_blobs(b, Split::Test)?),
        TaskData::Spirals(s) => (make_spirals(s, Split::Train)?, make_spirals(s, Split::Test)?),
    };
    Ok(Task {
        model: Mlp::new(cfg.layers())?,
        train,
        test,
    })
}

/// Initial parameters for `seed`; the same for every scheduler.
pub fn initial_params(task: &Task, seed: u64) -> Vec<f64> {
    task.model.init_params(seed)
}

pub fn shuffle_seed(seed: u64) -> u64 {
    derive_seed(seed, SHUFFLE_TAG)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub runs: Vec<RunResult>,
    pub report: AggregateReport,
}

impl Experiment {
    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| r.summary.diverged)
    }

    pub fn run(&self, scheduler: &str, seed: u64) -> Option<&RunResult> {
        self.runs
            .iter()
            .find(|r| r.summary.scheduler == scheduler && r.summary.seed == seed)
    }
}

pub fn run_single(
    cfg: &ExperimentConfig,
    task: &Task,
    entry: &SchedulerEntry,
    seed: u64,
) -> Result<RunResult, HarnessError> {
    let mut scheduler = entry.kind.build(&entry.name, cfg.scheduler_config(entry))?;
    let outcome = train_run(
        &task.train,
        &task.test,
        &task.model,
        &initial_params(task, seed),
        shuffle_seed(seed),
        scheduler.as_mut(),
        &cfg.train_config(),
    )?;
    let lambda = if cfg.run.probe_hessian && !outcome.record.diverged {
        Some(probe(cfg, task, &outcome.snapshot.params, seed)?)
    } else {
        None
    };
    let r = &outcome.record;
    let summary = RunSummary {
        scheduler: entry.name.clone(),
        seed,
        final_test_acc: r.final_test_acc(),
        final_train_loss: r.final_train_loss,
        final_train_acc: r.final_train_acc,
        max_lr: r.max_lr(),
        diverged: r.diverged,
        lambda,
    };
    Ok(RunResult { summary, outcome })
}

/// Top Hessian eigenvalue of the full-training-set loss at `params`.
pub fn probe(
    cfg: &ExperimentConfig,
    task: &Task,
    params: &[f64],
    seed: u64,
) -> Result<EigenEstimate, HarnessError> {
    let loss = MlpLoss {
        model: &task.model,
        data: &task.train,
    };
    let mut settings = cfg.run.hessian.clone();
    settings.seed = seed;
    Ok(HessianProbe::new(params.to_vec(), &loss, settings)?.top_eigenvalue()?)
}

/// Every (scheduler, seed) pair, scheduler-major, on a pool of
/// `cfg.run.jobs` workers. Results come back in job order regardless of
/// scheduling, so the report is deterministic.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    let task = build_task(&cfg.task)?;
    let jobs: Vec<(&SchedulerEntry, u64)> = cfg
        .schedulers
        .iter()
        .flat_map(|e| cfg.run.seeds.iter().map(move |&s| (e, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Invalid(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(entry, seed)| run_single(cfg, &task, entry, seed))
            .collect::<Result<_, _>>()
    })?;
    let report = aggregate(runs.iter().map(|r| r.summary.clone()).collect());
    Ok(Experiment { runs, report })
}
