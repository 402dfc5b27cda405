use super::volsched::cosine_base;
use super::{check_accuracy, LrScheduler, SchedulerConfig, SchedulerError};

/// Cosine annealing LR at global step `step`, warmup included.
pub fn cosine_baseline_lr(step: usize, cfg: &SchedulerConfig) -> f64 {
    if let Some(lr) = cfg.warmup_lr(step) {
        return lr;
    }
    let t = step - cfg.warmup_steps;
    cfg.eta_min + (cfg.base_lr - cfg.eta_min) * cosine_base(t, cfg.horizon()) / 2.0
}

/// `max(base_lr · γ^epoch, eta_min)` where `epoch` counts post-warmup epochs.
pub fn exponential_baseline_lr(epoch: usize, gamma: f64, cfg: &SchedulerConfig) -> f64 {
    let exp = i32::try_from(epoch).unwrap_or(i32::MAX);
    (cfg.base_lr * gamma.powi(exp)).max(cfg.eta_min)
}

#[derive(Debug, Clone)]
pub struct CosineAnnealing {
    name: String,
    config: SchedulerConfig,
    step_count: usize,
}

impl CosineAnnealing {
    pub fn new(config: SchedulerConfig) -> Result<Self, SchedulerError> {
        config.validate()?;
        Ok(Self {
            name: "cosine".into(),
            config,
            step_count: 0,
        })
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

impl LrScheduler for CosineAnnealing {
    fn name(&self) -> &str {
        &self.name
    }

    fn lr(&self) -> f64 {
        cosine_baseline_lr(self.step_count, &self.config)
    }

    fn observe(&mut self, batch_accuracy: f64) -> Result<(), SchedulerError> {
        check_accuracy(batch_accuracy)
    }

    fn step(&mut self) -> f64 {
        self.step_count += 1;
        self.lr()
    }
}

/// Per-epoch exponential decay. Epochs that end while still inside warmup
/// do not count toward the exponent.
#[derive(Debug, Clone)]
pub struct ExponentialDecay {
    name: String,
    config: SchedulerConfig,
    gamma: f64,
    step_count: usize,
    epochs: usize,
}

impl ExponentialDecay {
    pub fn new(config: SchedulerConfig, gamma: f64) -> Result<Self, SchedulerError> {
        config.validate()?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(SchedulerError::InvalidConfig(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        Ok(Self {
            name: "exponential".into(),
            config,
            gamma,
            step_count: 0,
            epochs: 0,
        })
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

impl LrScheduler for ExponentialDecay {
    fn name(&self) -> &str {
        &self.name
    }

    fn lr(&self) -> f64 {
        self.config
            .warmup_lr(self.step_count)
            .unwrap_or_else(|| exponential_baseline_lr(self.epochs, self.gamma, &self.config))
    }

    fn observe(&mut self, batch_accuracy: f64) -> Result<(), SchedulerError> {
        check_accuracy(batch_accuracy)
    }

    fn step(&mut self) -> f64 {
        self.step_count += 1;
        self.lr()
    }

    fn end_epoch(&mut self, _metric: f64) -> f64 {
        if self.step_count > self.config.warmup_steps {
            self.epochs += 1;
        }
        self.lr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateauMode {
    Min,
    Max,
}

impl PlateauMode {
    fn improves(self, metric: f64, best: f64) -> bool {
        match self {
            PlateauMode::Max => metric > best,
            PlateauMode::Min => metric < best,
        }
    }

    fn worst(self) -> f64 {
        match self {
            PlateauMode::Max => f64::NEG_INFINITY,
            PlateauMode::Min => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for PlateauMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlateauMode::Min => "min",
            PlateauMode::Max => "max",
        })
    }
}

impl std::str::FromStr for PlateauMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(PlateauMode::Min),
            "max" => Ok(PlateauMode::Max),
            other => Err(format!("expected `min` or `max`, got `{other}`")),
        }
    }
}

/// Reduce-on-plateau: the LR is multiplied by `factor` once the metric has
/// failed to strictly improve for more than `patience` consecutive epochs.
/// Epochs ending inside warmup are ignored.
#[derive(Debug, Clone)]
pub struct ReduceOnPlateau {
    name: String,
    config: SchedulerConfig,
    mode: PlateauMode,
    factor: f64,
    patience: usize,
    step_count: usize,
    lr: f64,
    best: f64,
    bad_epochs: usize,
}

impl ReduceOnPlateau {
    pub fn new(
        config: SchedulerConfig,
        mode: PlateauMode,
        factor: f64,
        patience: usize,
    ) -> Result<Self, SchedulerError> {
        config.validate()?;
        if !(factor > 0.0 && factor < 1.0) {
            return Err(SchedulerError::InvalidConfig(format!(
                "plateau factor must lie in (0, 1), got {factor}"
            )));
        }
        Ok(Self {
            name: "plateau".into(),
            lr: config.base_lr,
            config,
            mode,
            factor,
            patience,
            step_count: 0,
            best: mode.worst(),
            bad_epochs: 0,
        })
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn bad_epochs(&self) -> usize {
        self.bad_epochs
    }

    /// Set the current LR directly (used to start mid-schedule in tests).
    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }
}

impl LrScheduler for ReduceOnPlateau {
    fn name(&self) -> &str {
        &self.name
    }

    fn lr(&self) -> f64 {
        self.config.warmup_lr(self.step_count).unwrap_or(self.lr)
    }

    fn observe(&mut self, batch_accuracy: f64) -> Result<(), SchedulerError> {
        check_accuracy(batch_accuracy)
    }

    fn step(&mut self) -> f64 {
        self.step_count += 1;
        self.lr()
    }

    fn end_epoch(&mut self, metric: f64) -> f64 {
        if self.step_count < self.config.warmup_steps {
            return self.lr();
        }
        if self.mode.improves(metric, self.best) {
            self.best = metric;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs > self.patience {
                self.lr = (self.lr * self.factor).max(self.config.eta_min);
                self.bad_epochs = 0;
            }
        }
        self.lr()
    }
}
