//! Aggregation across seeds and CSV emission.
//!
//! Output directory layout:
//!
//! ```text
//! summary.csv        one row per scheduler
//! pairs.csv          paired t-test for every scheduler pair sharing seeds
//! runs.csv           one row per (scheduler, seed)
//! runs/<name>_seed<k>_steps.csv, _epochs.csv, .theta
//! fig_lr.csv         mean LR per optimizer step
//! fig_train_loss.csv mean per-epoch training loss
//! fig_test_acc.csv   mean per-epoch test accuracy
//! ```
//!
//! Figure files have a `step` column followed by one column per scheduler.
//! In the per-epoch files `step` counts epochs from 1.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read};
use std::path::Path;

use super::experiment::RunResult;
use super::HarnessError;
use crate::hessian::EigenEstimate;
use crate::stats::{mean, paired_t_test, sample_stdev, PairedTTest};
use crate::trainer::{write_epochs_csv, write_steps_csv};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scheduler: String,
    pub seed: u64,
    /// Test accuracy after the last completed epoch; NaN if none completed.
    pub final_test_acc: f64,
    pub final_train_loss: f64,
    pub final_train_acc: f64,
    pub max_lr: f64,
    pub diverged: bool,
    pub lambda: Option<EigenEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerSummary {
    pub name: String,
    pub mean_acc: f64,
    /// Sample standard deviation; 0 when only one seed contributed.
    pub std_acc: f64,
    pub n_seeds: usize,
    pub single_seed: bool,
    pub diverged: usize,
    /// Mean and standard deviation of λ_max over probed runs.
    pub lambda: Option<(f64, f64)>,
}

impl SchedulerSummary {
    /// Percent accuracy as `mean±std`, e.g. `70.89±0.3`.
    pub fn display(&self) -> String {
        format!("{:.2}±{:.1}", 100.0 * self.mean_acc, 100.0 * self.std_acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub a: String,
    pub b: String,
    /// `None` when the pairing is degenerate.
    pub test: Option<PairedTTest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub runs: Vec<RunSummary>,
    pub schedulers: Vec<SchedulerSummary>,
    pub pairs: Vec<PairRow>,
}

impl AggregateReport {
    pub fn scheduler(&self, name: &str) -> Option<&SchedulerSummary> {
        self.schedulers.iter().find(|s| s.name == name)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairRow> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }

    pub fn probed(&self) -> bool {
        self.runs.iter().any(|r| r.lambda.is_some())
    }
}

fn spread(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    (m, sample_stdev(xs).unwrap_or(0.0))
}

/// Group runs by scheduler (in first-appearance order) and compare every
/// pair of schedulers that ran on the same seed set.
pub fn aggregate(runs: Vec<RunSummary>) -> AggregateReport {
    let mut names: Vec<&str> = Vec::new();
    for r in &runs {
        if !names.contains(&r.scheduler.as_str()) {
            names.push(&r.scheduler);
        }
    }
    let by_name = |name: &str| -> Vec<&RunSummary> {
        let mut rs: Vec<&RunSummary> = runs.iter().filter(|r| r.scheduler == name).collect();
        rs.sort_by_key(|r| r.seed);
        rs
    };

    let mut schedulers = Vec::new();
    for &name in &names {
        let rs = by_name(name);
        let accs: Vec<f64> = rs
            .iter()
            .map(|r| r.final_test_acc)
            .filter(|a| a.is_finite())
            .collect();
        let (mean_acc, std_acc) = if accs.is_empty() {
            (f64::NAN, 0.0)
        } else {
            spread(&accs)
        };
        let lambdas: Vec<f64> = rs
            .iter()
            .filter_map(|r| r.lambda.map(|l| l.lambda_max))
            .collect();
        schedulers.push(SchedulerSummary {
            name: name.to_string(),
            mean_acc,
            std_acc,
            n_seeds: accs.len(),
            single_seed: accs.len() == 1,
            diverged: rs.iter().filter(|r| r.diverged).count(),
            lambda: (!lambdas.is_empty()).then(|| spread(&lambdas)),
        });
    }

    let mut pairs = Vec::new();
    for (i, &a) in names.iter().enumerate() {
        for &b in &names[i + 1..] {
            let (ra, rb) = (by_name(a), by_name(b));
            let same_seeds = ra.len() == rb.len() && ra.iter().zip(&rb).all(|(x, y)| x.seed == y.seed);
            if !same_seeds {
                continue;
            }
            let xa: Vec<f64> = ra.iter().map(|r| r.final_test_acc).collect();
            let xb: Vec<f64> = rb.iter().map(|r| r.final_test_acc).collect();
            let test = paired_t_test(&xa, &xb).ok().filter(|t| t.t.is_finite());
            pairs.push(PairRow {
                a: a.to_string(),
                b: b.to_string(),
                test,
            });
        }
    }

    AggregateReport {
        runs,
        schedulers,
        pairs,
    }
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

/// Scheduler names reduced to characters safe in file names.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-=".contains(c) { c } else { '_' })
        .collect()
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

/// `summary.csv`, `pairs.csv` and `runs.csv`.
pub fn write_aggregate(report: &AggregateReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let probed = report.probed();

    let mut header = vec![
        "scheduler",
        "mean_acc",
        "std_acc",
        "n_seeds",
        "single_seed",
        "diverged",
        "display",
    ];
    if probed {
        header.extend(["mean_lambda_max", "std_lambda_max"]);
    }
    let rows: Vec<Vec<String>> = report
        .schedulers
        .iter()
        .map(|s| {
            let mut row = vec![
                s.name.clone(),
                s.mean_acc.to_string(),
                s.std_acc.to_string(),
                s.n_seeds.to_string(),
                s.single_seed.to_string(),
                s.diverged.to_string(),
                s.display(),
            ];
            if probed {
                row.push(opt_num(s.lambda.map(|l| l.0)));
                row.push(opt_num(s.lambda.map(|l| l.1)));
            }
            row
        })
        .collect();
    write_csv(&dir.join("summary.csv"), &header, &rows)?;

    let rows: Vec<Vec<String>> = report
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.a.clone(),
                p.b.clone(),
                opt_num(p.test.map(|t| t.t)),
                p.test.map_or(String::new(), |t| t.dof.to_string()),
                opt_num(p.test.map(|t| t.p_two_sided)),
            ]
        })
        .collect();
    write_csv(&dir.join("pairs.csv"), &["a", "b", "t", "dof", "p"], &rows)?;

    let mut header = vec![
        "scheduler",
        "seed",
        "final_test_acc",
        "final_train_loss",
        "final_train_acc",
        "max_lr",
        "diverged",
    ];
    if probed {
        header.extend([
            "lambda_max",
            "lambda_iterations",
            "lambda_residual",
            "lambda_converged",
        ]);
    }
    let rows: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![
                r.scheduler.clone(),
                r.seed.to_string(),
                r.final_test_acc.to_string(),
                r.final_train_loss.to_string(),
                r.final_train_acc.to_string(),
                r.max_lr.to_string(),
                r.diverged.to_string(),
            ];
            if probed {
                let l = r.lambda;
                row.push(opt_num(l.map(|e| e.lambda_max)));
                row.push(l.map_or(String::new(), |e| e.iterations.to_string()));
                row.push(opt_num(l.map(|e| e.residual)));
                row.push(l.map_or(String::new(), |e| e.converged.to_string()));
            }
            row
        })
        .collect();
    write_csv(&dir.join("runs.csv"), &header, &rows)
}

fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: Option<usize>,
    name: &str,
    line: usize,
) -> Result<T, HarnessError> {
    let raw = idx.and_then(|i| rec.get(i)).ok_or_else(|| {
        HarnessError::Invalid(format!("runs.csv line {line}: missing column `{name}`"))
    })?;
    raw.parse().map_err(|_| {
        HarnessError::Invalid(format!("runs.csv line {line}: bad `{name}` value `{raw}`"))
    })
}

/// Read back a `runs.csv` written by [`write_aggregate`].
pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunSummary>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let probed = col("lambda_max").is_some();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let has_lambda = probed && col("lambda_max").and_then(|i| rec.get(i)).is_some_and(|v| !v.is_empty());
        let lambda = if has_lambda {
            let lambda_max: f64 = parse_field(&rec, col("lambda_max"), "lambda_max", line)?;
            Some(EigenEstimate {
                lambda_max,
                iterations: parse_field(&rec, col("lambda_iterations"), "lambda_iterations", line)?,
                residual: parse_field(&rec, col("lambda_residual"), "lambda_residual", line)?,
                converged: parse_field(&rec, col("lambda_converged"), "lambda_converged", line)?,
                negative_curvature: lambda_max < 0.0,
            })
        } else {
            None
        };
        out.push(RunSummary {
            scheduler: parse_field(&rec, col("scheduler"), "scheduler", line)?,
            seed: parse_field(&rec, col("seed"), "seed", line)?,
            final_test_acc: parse_field(&rec, col("final_test_acc"), "final_test_acc", line)?,
            final_train_loss: parse_field(&rec, col("final_train_loss"), "final_train_loss", line)?,
            final_train_acc: parse_field(&rec, col("final_train_acc"), "final_train_acc", line)?,
            max_lr: parse_field(&rec, col("max_lr"), "max_lr", line)?,
            diverged: parse_field(&rec, col("diverged"), "diverged", line)?,
            lambda,
        });
    }
    Ok(out)
}

/// Figure table keyed by `step`: one column per scheduler holding the mean
/// over seeds that reached that step.
pub(crate) fn write_figure(
    path: &Path,
    names: &[&str],
    series: &[BTreeMap<usize, Vec<f64>>],
) -> Result<(), HarnessError> {
    let mut steps: Vec<usize> = series.iter().flat_map(|s| s.keys().copied()).collect();
    steps.sort_unstable();
    steps.dedup();
    let mut header = vec!["step"];
    header.extend(names);
    let rows: Vec<Vec<String>> = steps
        .iter()
        .map(|step| {
            let mut row = vec![step.to_string()];
            row.extend(
                series
                    .iter()
                    .map(|s| s.get(step).map_or(String::new(), |v| mean(v).to_string())),
            );
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Per-run CSVs and snapshots under `runs/`, plus the figure tables.
pub fn write_run_files(runs: &[RunResult], dir: &Path) -> Result<(), HarnessError> {
    let run_dir = dir.join("runs");
    fs::create_dir_all(&run_dir)?;
    let mut names: Vec<&str> = Vec::new();
    for r in runs {
        let stem = format!("{}_seed{}", file_stem(&r.summary.scheduler), r.summary.seed);
        let rec = &r.outcome.record;
        write_steps_csv(rec, BufWriter::new(File::create(run_dir.join(format!("{stem}_steps.csv")))?))?;
        write_epochs_csv(rec, BufWriter::new(File::create(run_dir.join(format!("{stem}_epochs.csv")))?))?;
        r.outcome.snapshot.save(&run_dir.join(format!("{stem}.theta")))?;
        if !names.contains(&r.summary.scheduler.as_str()) {
            names.push(&r.summary.scheduler);
        }
    }

    let mut lr = vec![BTreeMap::<usize, Vec<f64>>::new(); names.len()];
    let mut loss = lr.clone();
    let mut acc = lr.clone();
    for r in runs {
        let k = names.iter().position(|&n| n == r.summary.scheduler).unwrap();
        let rec = &r.outcome.record;
        let mut epoch_loss: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for s in &rec.steps {
            lr[k].entry(s.step).or_default().push(s.lr);
            epoch_loss.entry(s.epoch).or_default().push(s.train_loss);
        }
        for e in &rec.epochs {
            if let Some(l) = epoch_loss.get(&e.epoch) {
                loss[k].entry(e.epoch).or_default().push(mean(l));
            }
            acc[k].entry(e.epoch).or_default().push(e.test_acc);
        }
    }
    write_figure(&dir.join("fig_lr.csv"), &names, &lr)?;
    write_figure(&dir.join("fig_train_loss.csv"), &names, &loss)?;
    write_figure(&dir.join("fig_test_acc.csv"), &names, &acc)
}

/// Everything an experiment produces.
pub fn emit_report(report: &AggregateReport, runs: &[RunResult], dir: &Path) -> Result<(), HarnessError> {
    write_aggregate(report, dir)?;
    write_run_files(runs, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(name: &str, seed: u64, acc: f64) -> RunSummary {
        RunSummary {
            scheduler: name.into(),
            seed,
            final_test_acc: acc,
            final_train_loss: 0.1,
            final_train_acc: 0.9,
            max_lr: 0.1,
            diverged: false,
            lambda: None,
        }
    }

    #[test]
    fn single_seed_reports_zero_std() {
        let rep = aggregate(vec![run("cosine", 8, 0.7)]);
        let s = &rep.schedulers[0];
        assert_eq!((s.std_acc, s.n_seeds, s.single_seed), (0.0, 1, true));
        assert!(rep.pairs.is_empty());
    }

    #[test]
    fn display_format() {
        let s = SchedulerSummary {
            name: "x".into(),
            mean_acc: 0.7089,
            std_acc: 0.003,
            n_seeds: 3,
            single_seed: false,
            diverged: 0,
            lambda: None,
        };
        assert_eq!(s.display(), "70.89±0.3");
    }

    #[test]
    fn pairs_only_on_matching_seeds() {
        let rep = aggregate(vec![
            run("a", 1, 0.70),
            run("a", 2, 0.72),
            run("b", 1, 0.71),
            run("b", 2, 0.74),
            run("c", 1, 0.71),
        ]);
        assert_eq!(rep.pairs.len(), 1);
        let p = rep.pair("a", "b").unwrap().test.unwrap();
        assert_eq!(p.dof, 1);
        assert!(p.t < 0.0);
    }

    #[test]
    fn degenerate_pair_left_blank() {
        let rep = aggregate(vec![
            run("a", 1, 0.5),
            run("a", 2, 0.75),
            run("b", 1, 0.25),
            run("b", 2, 0.5),
        ]);
        assert_eq!(rep.pairs[0].test, None);
    }

    #[test]
    fn runs_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut probed = run("b", 2, 0.5);
        probed.lambda = Some(EigenEstimate {
            lambda_max: 2.5,
            iterations: 12,
            residual: 1e-5,
            converged: true,
            negative_curvature: false,
        });
        let runs = vec![run("a", 1, 0.25), probed, run("c", 1, f64::NAN)];
        let rep = aggregate(runs.clone());
        write_aggregate(&rep, dir.path()).unwrap();
        let back = read_runs_csv(File::open(dir.path().join("runs.csv")).unwrap()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[..2], runs[..2]);
        assert!(back[2].final_test_acc.is_nan());
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("scheduler,mean_acc,std_acc,n_seeds,single_seed,diverged,display,mean_lambda_max"));
    }

    #[test]
    fn lambda_columns_omitted_without_probes() {
        let dir = tempfile::tempdir().unwrap();
        write_aggregate(&aggregate(vec![run("a", 1, 0.25)]), dir.path()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(!summary.contains("lambda"));
        let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert!(!runs.contains("lambda"));
    }

    #[test]
    fn figure_union_of_steps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig.csv");
        let a = BTreeMap::from([(0, vec![1.0, 3.0]), (1, vec![2.0])]);
        let b = BTreeMap::from([(1, vec![5.0]), (2, vec![6.0])]);
        write_figure(&path, &["a", "b"], &[a, b]).unwrap();
        assert_eq!(
            fs::read_to_string(path).unwrap(),
            "step,a,b\n0,2,\n1,2,5\n2,,6\n"
        );
    }
}
