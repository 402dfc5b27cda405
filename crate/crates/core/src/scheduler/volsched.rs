use std::f64::consts::PI;

use super::{check_accuracy, AccuracyStream, LrScheduler, SchedulerConfig, SchedulerError};

/// Base cosine decay `g(t) = 1 + cos(π t / t_max)`, with `g(t) = 0` for
/// `t ≥ t_max`.
///
/// Evaluated as `2 cos²(π t / 2 t_max)`, which keeps full relative precision
/// as `g` approaches zero.
pub fn cosine_base(t: usize, t_max: usize) -> f64 {
    if t >= t_max {
        return 0.0;
    }
    let c = (PI * t as f64 / (2.0 * t_max as f64)).cos();
    2.0 * c * c
}

/// `g(t_cur) / g(t_prev)`: the cosine decay owed between two update steps.
pub fn cosine_ratio(t_cur: usize, t_prev: usize, t_max: usize) -> f64 {
    let denom = cosine_base(t_prev, t_max);
    if denom <= 0.0 {
        return 0.0;
    }
    cosine_base(t_cur, t_max) / denom
}

/// The correction factor α for a full window of `n` steps ending at `t_cur`.
pub fn cosine_correction(t_cur: usize, t_max: usize, n: usize) -> f64 {
    cosine_ratio(t_cur, t_cur.saturating_sub(n), t_max)
}

/// `1 + sgn(ρ − 1) · ln(1 + w |ρ − 1|)`.
pub fn signed_log_transform(rho: f64, w: f64) -> f64 {
    let delta = rho - 1.0;
    if delta == 0.0 {
        return 1.0;
    }
    1.0 + delta.signum() * (w * delta.abs()).ln_1p()
}

/// Volatility multiplier `M` from the stream's long-run and recent
/// log-return volatility. Both volatilities are floored at `epsilon` before
/// forming `ρ = σ_all / σ_N`.
pub fn vol_ratio_multiplier(
    stream: &AccuracyStream,
    w: f64,
    epsilon: f64,
) -> Result<f64, SchedulerError> {
    let need = stream.window() + 1;
    if stream.count() < need {
        return Err(SchedulerError::InsufficientHistory {
            have: stream.count(),
            need,
        });
    }
    let sigma_all = stream.sigma_all().max(epsilon);
    let sigma_recent = stream.sigma_recent().max(epsilon);
    Ok(signed_log_transform(sigma_all / sigma_recent, w))
}

/// `clamp(η · M · α, eta_min, cap)`.
pub fn multiplicative_update(eta: f64, m: f64, alpha: f64, eta_min: f64, cap: Option<f64>) -> f64 {
    let next = (eta * m * alpha).max(eta_min);
    match cap {
        Some(cap) => next.min(cap),
        None => next,
    }
}

/// The volatility-driven multiplicative scheduler.
///
/// Every `window_n` post-warmup steps the LR is multiplied by the volatility
/// multiplier `M` and by the cosine correction `α`, then clamped. With `M = 1`
/// the product of the `α` factors telescopes to plain cosine annealing. The
/// last update lands exactly on the horizon even when it is not a multiple
/// of the window.
#[derive(Debug, Clone)]
pub struct VolSched {
    name: String,
    config: SchedulerConfig,
    current_lr: f64,
    step_count: usize,
    /// Post-warmup position of the last update.
    last_update: usize,
    last_multiplier: Option<f64>,
    stream: AccuracyStream,
}

impl VolSched {
    pub fn new(config: SchedulerConfig) -> Result<Self, SchedulerError> {
        config.validate_volsched()?;
        Ok(Self {
            name: "volsched".to_string(),
            current_lr: config.base_lr,
            step_count: 0,
            last_update: 0,
            last_multiplier: None,
            stream: AccuracyStream::new(config.window_n, config.epsilon),
            config,
        })
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn stream(&self) -> &AccuracyStream {
        &self.stream
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// `M` applied at the most recent update, if any update happened.
    pub fn last_multiplier(&self) -> Option<f64> {
        self.last_multiplier
    }

    fn in_warmup(&self) -> bool {
        self.step_count < self.config.warmup_steps
    }

    fn update(&mut self, t: usize) {
        let cfg = &self.config;
        let m = if self.stream.has_full_window() {
            vol_ratio_multiplier(&self.stream, cfg.weight_w, cfg.epsilon)
                .expect("window is full")
        } else {
            1.0
        };
        let alpha = cosine_ratio(t, self.last_update, cfg.horizon());
        self.current_lr =
            multiplicative_update(self.current_lr, m, alpha, cfg.eta_min, cfg.max_lr_cap);
        self.last_update = t;
        self.last_multiplier = Some(m);
    }
}

impl LrScheduler for VolSched {
    fn name(&self) -> &str {
        &self.name
    }

    fn lr(&self) -> f64 {
        self.config
            .warmup_lr(self.step_count)
            .unwrap_or(self.current_lr)
    }

    fn observe(&mut self, batch_accuracy: f64) -> Result<(), SchedulerError> {
        if self.in_warmup() {
            check_accuracy(batch_accuracy)
        } else {
            self.stream.push(batch_accuracy)
        }
    }

    fn step(&mut self) -> f64 {
        self.step_count += 1;
        if self.in_warmup() {
            return self.lr();
        }
        let t = self.step_count - self.config.warmup_steps;
        let horizon = self.config.horizon();
        if t <= horizon && (t % self.config.window_n == 0 || t == horizon) {
            self.update(t);
        }
        self.current_lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream_of(history: &[f64], n: usize) -> AccuracyStream {
        let mut s = AccuracyStream::new(n, 1e-8);
        for &a in history {
            s.push(a).unwrap();
        }
        s
    }

    #[test]
    fn constant_history_gives_unit_multiplier() {
        let s = stream_of(&[0.5; 10], 4);
        for w in [0.0, 0.05, 3.0] {
            assert_eq!(vol_ratio_multiplier(&s, w, 1e-8).unwrap(), 1.0);
        }
    }

    #[test]
    fn zero_weight_gives_unit_multiplier() {
        let s = stream_of(&[0.1, 0.3, 0.2, 0.6, 0.5, 0.55, 0.52], 4);
        assert_eq!(vol_ratio_multiplier(&s, 0.0, 1e-8).unwrap(), 1.0);
    }

    // Frozen from an independent 50-digit recomputation of the algorithm.
    #[test]
    fn flat_recent_window_boosts() {
        let s = stream_of(&[0.10, 0.20, 0.10, 0.20, 0.15, 0.15, 0.15, 0.15, 0.15], 4);
        let m = vol_ratio_multiplier(&s, 0.05, 1e-8).unwrap();
        let expect = 15.655_914_870_316_527;
        assert!((m - expect).abs() <= 1e-12 * expect, "{m}");
    }

    #[test]
    fn volatile_recent_window_damps() {
        let mut h = vec![0.15; 5];
        h.extend([0.10, 0.20, 0.10, 0.20]);
        let s = stream_of(&h, 4);
        let m = vol_ratio_multiplier(&s, 0.05, 1e-8).unwrap();
        let expect = 0.982_984_907_576_864_1;
        assert!((m - expect).abs() <= 1e-12, "{m}");
    }

    #[test]
    fn insufficient_history_is_an_error() {
        let s = stream_of(&[0.5, 0.6, 0.7], 4);
        assert!(matches!(
            vol_ratio_multiplier(&s, 0.05, 1e-8),
            Err(SchedulerError::InsufficientHistory { have: 3, need: 5 })
        ));
    }

    #[test]
    fn correction_examples() {
        assert_eq!(cosine_correction(200, 200, 50), 0.0);
        let a = cosine_correction(100, 200, 50);
        assert!((a - 0.585_786_437_626_905).abs() < 1e-12);
        let prod: f64 = (1..=3).map(|k| cosine_correction(k * 50, 200, 50)).product();
        let expect = cosine_base(150, 200) / cosine_base(0, 200);
        assert!((prod - expect).abs() < 1e-14);
    }

    #[test]
    fn transform_is_odd_around_one() {
        for &rho in &[0.1, 0.5, 0.93, 1.4] {
            let up = signed_log_transform(rho, 0.3) - 1.0;
            let down = signed_log_transform(2.0 - rho, 0.3) - 1.0;
            assert!((up + down).abs() < 1e-15);
        }
    }

    #[test]
    fn floor_and_compounding() {
        assert_eq!(multiplicative_update(2e-4, 0.1, 1.0, 1e-4, None), 1e-4);
        let once = multiplicative_update(0.1, 1.2, 1.0, 0.0, None);
        let twice = multiplicative_update(once, 1.2, 1.0, 0.0, None);
        assert!((twice - 0.144).abs() < 1e-15);
        assert_eq!(multiplicative_update(1.0, 3.0, 1.0, 0.0, Some(1.5)), 1.5);
    }

    #[test]
    fn zero_weight_run_tracks_cosine() {
        let cfg = SchedulerConfig {
            base_lr: 0.1,
            eta_min: 0.0,
            t_max: 530,
            window_n: 50,
            weight_w: 0.0,
            warmup_steps: 0,
            ..Default::default()
        };
        let mut s = VolSched::new(cfg).unwrap();
        for t in 1..=530 {
            s.observe(0.3 + 0.001 * (t % 17) as f64).unwrap();
            let lr = s.step();
            if t % 50 == 0 || t == 530 {
                let expect = 0.1 * cosine_base(t, 530) / 2.0;
                assert!((lr - expect).abs() <= 1e-12 * expect.max(1e-300), "t={t}");
            }
        }
        assert_eq!(s.lr(), 0.0);
    }

    #[test]
    fn warmup_then_hold_between_updates() {
        let cfg = SchedulerConfig {
            base_lr: 0.1,
            t_max: 300,
            window_n: 20,
            warmup_steps: 10,
            start_factor: 0.1,
            ..Default::default()
        };
        let mut s = VolSched::new(cfg.clone()).unwrap();
        let mut lrs = vec![s.lr()];
        for _ in 0..40 {
            s.observe(0.4).unwrap();
            lrs.push(s.step());
        }
        for (step, lr) in lrs.iter().enumerate().take(10) {
            assert_eq!(Some(*lr), cfg.warmup_lr(step));
        }
        // post-warmup: constant base_lr until the first update at t = 20
        for lr in &lrs[10..30] {
            assert_eq!(*lr, 0.1);
        }
        assert!(lrs[30] < 0.1);
        assert_eq!(s.stream().count(), 30);
    }

    #[test]
    fn rejects_bad_accuracy_during_warmup() {
        let cfg = SchedulerConfig {
            warmup_steps: 5,
            ..Default::default()
        };
        let mut s = VolSched::new(cfg).unwrap();
        assert!(s.observe(1.5).is_err());
    }
}
