//! Learning-rate schedulers behind one stepping contract.
//!
//! The training loop drives every scheduler the same way:
//!
//! 1. read [`LrScheduler::lr`] and use it for the optimizer step,
//! 2. report the batch accuracy with [`LrScheduler::observe`],
//! 3. advance with [`LrScheduler::step`],
//! 4. at the end of each epoch call [`LrScheduler::end_epoch`] with the
//!    validation metric.
//!
//! "The LR at step t" is therefore the value returned by `lr()` after `t`
//! calls to `step()`, i.e. the LR used for the (t+1)-th optimizer step.
//!
//! A linear warmup is shared by all schedulers. Warmup steps are excluded
//! from the annealing horizon: positions used by the cosine shape are
//! counted from the end of warmup and run up to `t_max − warmup_steps`.

mod baselines;
mod stream;
mod volsched;

pub use baselines::{
    cosine_baseline_lr, exponential_baseline_lr, CosineAnnealing, ExponentialDecay, PlateauMode,
    ReduceOnPlateau,
};
pub use stream::AccuracyStream;
pub use volsched::{
    cosine_base, cosine_correction, cosine_ratio, multiplicative_update, signed_log_transform,
    vol_ratio_multiplier, VolSched,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("batch accuracy {0} outside [0, 1] (expected a fraction, not a percentage)")]
    AccuracyOutOfRange(f64),
    #[error("insufficient history: {have} accuracies observed, need at least {need}")]
    InsufficientHistory { have: usize, need: usize },
    #[error("invalid scheduler config: {0}")]
    InvalidConfig(String),
}

/// Parameters shared by every scheduler, plus the VolSched-specific ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    pub base_lr: f64,
    pub eta_min: f64,
    /// Total optimizer steps of the run, warmup included.
    pub t_max: usize,
    /// Volatility window and update cadence.
    pub window_n: usize,
    pub weight_w: f64,
    pub epsilon: f64,
    pub warmup_steps: usize,
    pub start_factor: f64,
    pub max_lr_cap: Option<f64>,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.1,
            eta_min: 1e-4,
            t_max: 1000,
            window_n: 50,
            weight_w: 0.05,
            epsilon: 1e-8,
            warmup_steps: 0,
            start_factor: 0.01,
            max_lr_cap: None,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        let bad = |msg: String| Err(SchedulerError::InvalidConfig(msg));
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("base_lr must be positive, got {}", self.base_lr));
        }
        if !(self.eta_min >= 0.0 && self.eta_min <= self.base_lr) {
            return bad(format!(
                "eta_min must lie in [0, base_lr], got {}",
                self.eta_min
            ));
        }
        if self.t_max == 0 {
            return bad("t_max must be positive".into());
        }
        if self.warmup_steps >= self.t_max {
            return bad(format!(
                "warmup_steps ({}) must be below t_max ({})",
                self.warmup_steps, self.t_max
            ));
        }
        if !(self.start_factor > 0.0 && self.start_factor <= 1.0) {
            return bad(format!(
                "start_factor must lie in (0, 1], got {}",
                self.start_factor
            ));
        }
        if let Some(cap) = self.max_lr_cap {
            if !(cap > 0.0) {
                return bad(format!("max_lr_cap must be positive, got {cap}"));
            }
        }
        Ok(())
    }

    pub fn validate_volsched(&self) -> Result<(), SchedulerError> {
        self.validate()?;
        let bad = |msg: String| Err(SchedulerError::InvalidConfig(msg));
        if self.window_n < 2 {
            return bad(format!("window N must be at least 2, got {}", self.window_n));
        }
        if self.window_n >= self.t_max {
            return bad(format!(
                "window N ({}) must be below t_max ({})",
                self.window_n, self.t_max
            ));
        }
        if !(self.weight_w >= 0.0 && self.weight_w.is_finite()) {
            return bad(format!("w must be non-negative, got {}", self.weight_w));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    /// Post-warmup annealing horizon.
    pub fn horizon(&self) -> usize {
        self.t_max.saturating_sub(self.warmup_steps)
    }

    /// Warmup LR at global step `step`, or `None` once warmup is over.
    pub fn warmup_lr(&self, step: usize) -> Option<f64> {
        if step < self.warmup_steps {
            let frac = step as f64 / self.warmup_steps as f64;
            Some(self.base_lr * (self.start_factor + (1.0 - self.start_factor) * frac))
        } else {
            None
        }
    }
}

/// The stepping contract consumed by the training loop.
pub trait LrScheduler: Send {
    fn name(&self) -> &str;

    /// LR for the next optimizer step.
    fn lr(&self) -> f64;

    /// Record the training accuracy (a fraction in `[0, 1]`) of the batch
    /// that was just processed.
    fn observe(&mut self, batch_accuracy: f64) -> Result<(), SchedulerError>;

    /// Advance one optimizer step and return the new LR.
    fn step(&mut self) -> f64;

    /// Epoch boundary with the validation metric. Returns the new LR.
    fn end_epoch(&mut self, _metric: f64) -> f64 {
        self.lr()
    }
}

pub(crate) fn check_accuracy(acc: f64) -> Result<(), SchedulerError> {
    if (0.0..=1.0).contains(&acc) {
        Ok(())
    } else {
        Err(SchedulerError::AccuracyOutOfRange(acc))
    }
}

/// Which schedule to build, with the parameters that are not part of
/// [`SchedulerConfig`].
#[derive(Debug, Clone, PartialEq)]
pub enum SchedulerKind {
    VolSched,
    Cosine,
    Exponential { gamma: f64 },
    Plateau {
        mode: PlateauMode,
        factor: f64,
        patience: usize,
    },
}

impl SchedulerKind {
    pub fn family(&self) -> &'static str {
        match self {
            SchedulerKind::VolSched => "volsched",
            SchedulerKind::Cosine => "cosine",
            SchedulerKind::Exponential { .. } => "exponential",
            SchedulerKind::Plateau { .. } => "plateau",
        }
    }

    pub fn build(
        &self,
        name: &str,
        config: SchedulerConfig,
    ) -> Result<Box<dyn LrScheduler>, SchedulerError> {
        Ok(match *self {
            SchedulerKind::VolSched => Box::new(VolSched::new(config)?.with_name(name)),
            SchedulerKind::Cosine => Box::new(CosineAnnealing::new(config)?.with_name(name)),
            SchedulerKind::Exponential { gamma } => {
                Box::new(ExponentialDecay::new(config, gamma)?.with_name(name))
            }
            SchedulerKind::Plateau {
                mode,
                factor,
                patience,
            } => Box::new(ReduceOnPlateau::new(config, mode, factor, patience)?.with_name(name)),
        })
    }
}
