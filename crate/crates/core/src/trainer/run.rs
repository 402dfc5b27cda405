use std::io::Write;

use rand::seq::SliceRandom;

use super::data::Dataset;
use super::mlp::Mlp;
use super::sgd::SgdState;
use super::snapshot::ModelSnapshot;
use super::TrainError;
use crate::rng::seeded;
use crate::scheduler::LrScheduler;

/// A batch loss above this (or a non-finite one) halts the run as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

pub fn steps_per_epoch(samples: usize, batch_size: usize) -> usize {
    samples.div_ceil(batch_size)
}

/// One optimizer step. `step` is the number of optimizer steps taken before
/// this one; `lr` is the rate used for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub test_acc: f64,
    pub test_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    pub diverged: bool,
    /// Full training-set loss and accuracy of the final parameters.
    pub final_train_loss: f64,
    pub final_train_acc: f64,
}

impl RunRecord {
    pub fn final_test_acc(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.test_acc)
    }

    pub fn max_lr(&self) -> f64 {
        self.steps.iter().map(|s| s.lr).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub snapshot: ModelSnapshot,
}

/// Mean loss and accuracy over the whole dataset.
pub fn evaluate(model: &Mlp, params: &[f64], data: &Dataset) -> Result<(f64, f64), TrainError> {
    model.loss_accuracy(params, &data.as_batch())
}

/// Train from `init_params`, reshuffling the training set each epoch with a
/// generator seeded by `shuffle_seed`. Test metrics are taken after the last
/// optimizer step of each epoch and passed to `end_epoch`.
pub fn train_run(
    train: &Dataset,
    test: &Dataset,
    model: &Mlp,
    init_params: &[f64],
    shuffle_seed: u64,
    scheduler: &mut dyn LrScheduler,
    cfg: &TrainConfig,
) -> Result<RunOutcome, TrainError> {
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(TrainError::InvalidSpec(
            "epochs and batch size must be positive".into(),
        ));
    }
    if init_params.len() != model.param_count() {
        return Err(TrainError::ShapeMismatch(format!(
            "expected {} initial parameters, got {}",
            model.param_count(),
            init_params.len()
        )));
    }
    if train.is_empty() || test.is_empty() {
        return Err(TrainError::InvalidSpec("empty dataset".into()));
    }

    let mut params = init_params.to_vec();
    let mut opt = SgdState::new(params.len(), cfg.momentum, cfg.weight_decay);
    let mut rng = seeded(shuffle_seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut steps = Vec::with_capacity(cfg.epochs * steps_per_epoch(train.len(), cfg.batch_size));
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;
    let mut step = 0usize;

    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train.gather(chunk);
            let lr = scheduler.lr();
            let lg = model.loss_grad_accuracy(&params, &batch.view())?;
            steps.push(StepRecord {
                step,
                epoch,
                lr,
                train_loss: lg.loss,
                train_acc: lg.accuracy,
            });
            if !lg.loss.is_finite() || lg.loss > DIVERGENCE_LOSS {
                diverged = true;
                break 'epochs;
            }
            scheduler.observe(lg.accuracy)?;
            scheduler.step();
            opt.step(&mut params, &lg.grad, lr);
            step += 1;
        }
        let (test_loss, test_acc) = evaluate(model, &params, test)?;
        epochs.push(EpochRecord {
            epoch,
            test_acc,
            test_loss,
        });
        scheduler.end_epoch(test_acc);
    }

    let (final_train_loss, final_train_acc) = evaluate(model, &params, train)?;
    Ok(RunOutcome {
        record: RunRecord {
            steps,
            epochs,
            diverged,
            final_train_loss,
            final_train_acc,
        },
        snapshot: ModelSnapshot { params },
    })
}

fn csv_err(e: csv::Error) -> TrainError {
    TrainError::Io(std::io::Error::other(e))
}

/// `step,epoch,lr,train_loss,train_acc`
pub fn write_steps_csv<W: Write>(record: &RunRecord, out: W) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "epoch", "lr", "train_loss", "train_acc"])
        .map_err(csv_err)?;
    for s in &record.steps {
        w.write_record([
            s.step.to_string(),
            s.epoch.to_string(),
            s.lr.to_string(),
            s.train_loss.to_string(),
            s.train_acc.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `epoch,test_acc,test_loss`
pub fn write_epochs_csv<W: Write>(record: &RunRecord, out: W) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "test_acc", "test_loss"])
        .map_err(csv_err)?;
    for e in &record.epochs {
        w.write_record([
            e.epoch.to_string(),
            e.test_acc.to_string(),
            e.test_loss.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
