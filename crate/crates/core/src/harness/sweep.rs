//! Sensitivity sweep over the VolSched weight `w`.

use std::collections::BTreeMap;
use std::path::Path;

use super::config::{ExperimentConfig, SchedulerEntry};
use super::experiment::{run_experiment, Experiment};
use super::report::{emit_report, write_csv, write_figure, SchedulerSummary};
use super::HarnessError;
use crate::scheduler::SchedulerKind;
use crate::stats::PairedTTest;

pub const DEFAULT_W_VALUES: [f64; 3] = [0.01, 0.05, 0.1];
pub const BASELINE: &str = "cosine";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub w: f64,
    pub summary: SchedulerSummary,
    /// Largest LR reached by any seed.
    pub max_lr: f64,
    pub vs_baseline: Option<PairedTTest>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub experiment: Experiment,
    pub rows: Vec<SweepRow>,
}

pub fn sweep_label(w: f64) -> String {
    format!("w={w}")
}

/// The experiment actually run: a cosine baseline followed by one copy of
/// the first VolSched section per `w`.
pub fn sweep_config(cfg: &ExperimentConfig, w_values: &[f64]) -> Result<ExperimentConfig, HarnessError> {
    let template = cfg
        .schedulers
        .iter()
        .find(|s| s.kind == SchedulerKind::VolSched)
        .ok_or_else(|| HarnessError::Invalid("sweep-w needs a [volsched] section".into()))?;
    if w_values.is_empty() {
        return Err(HarnessError::Invalid("sweep-w needs at least one w value".into()));
    }
    let mut baseline = cfg
        .schedulers
        .iter()
        .find(|s| s.kind == SchedulerKind::Cosine)
        .cloned()
        .unwrap_or_else(|| SchedulerEntry {
            warmup_epochs: template.warmup_epochs,
            start_factor: template.start_factor,
            ..SchedulerEntry::new(BASELINE, SchedulerKind::Cosine)
        });
    baseline.name = BASELINE.into();

    let mut schedulers = vec![baseline];
    for &w in w_values {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(HarnessError::Invalid(format!("w must be non-negative, got {w}")));
        }
        let name = sweep_label(w);
        if schedulers.iter().any(|s| s.name == name) {
            return Err(HarnessError::Invalid(format!("duplicate w value {w}")));
        }
        schedulers.push(SchedulerEntry {
            name,
            weight_w: w,
            ..template.clone()
        });
    }
    Ok(ExperimentConfig {
        schedulers,
        ..cfg.clone()
    })
}

pub fn sweep_w(cfg: &ExperimentConfig, w_values: &[f64]) -> Result<Sweep, HarnessError> {
    let experiment = run_experiment(&sweep_config(cfg, w_values)?)?;
    let report = &experiment.report;
    let rows = w_values
        .iter()
        .map(|&w| {
            let name = sweep_label(w);
            let max_lr = report
                .runs
                .iter()
                .filter(|r| r.scheduler == name)
                .map(|r| r.max_lr)
                .fold(f64::NEG_INFINITY, f64::max);
            SweepRow {
                w,
                summary: report.scheduler(&name).cloned().expect("every w was run"),
                max_lr,
                vs_baseline: report.pair(BASELINE, &name).and_then(|p| p.test),
            }
        })
        .collect();
    Ok(Sweep { experiment, rows })
}

/// The experiment's report plus `sweep.csv` (one row per `w`) and
/// `sweep_lr.csv` (LR per step for the first seed, one column per run).
pub fn write_sweep(sweep: &Sweep, dir: &Path) -> Result<(), HarnessError> {
    emit_report(&sweep.experiment.report, &sweep.experiment.runs, dir)?;
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|r| {
            let s = &r.summary;
            vec![
                r.w.to_string(),
                s.mean_acc.to_string(),
                s.std_acc.to_string(),
                s.n_seeds.to_string(),
                r.max_lr.to_string(),
                s.display(),
                r.vs_baseline.map_or(String::new(), |t| t.t.to_string()),
                r.vs_baseline.map_or(String::new(), |t| t.p_two_sided.to_string()),
            ]
        })
        .collect();
    write_csv(
        &dir.join("sweep.csv"),
        &["w", "mean_acc", "std_acc", "n_seeds", "max_lr", "display", "t_vs_baseline", "p_vs_baseline"],
        &rows,
    )?;

    let runs = &sweep.experiment.runs;
    let Some(first_seed) = runs.first().map(|r| r.summary.seed) else {
        return Ok(());
    };
    let mut names = Vec::new();
    let mut series = Vec::new();
    for r in runs.iter().filter(|r| r.summary.seed == first_seed) {
        names.push(r.summary.scheduler.as_str());
        series.push(
            r.outcome
                .record
                .steps
                .iter()
                .map(|s| (s.step, vec![s.lr]))
                .collect::<BTreeMap<_, _>>(),
        );
    }
    write_figure(&dir.join("sweep_lr.csv"), &names, &series)
}
