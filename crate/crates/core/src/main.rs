use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use volsched::harness::report::{file_stem, write_aggregate};
use volsched::harness::{
    aggregate, build_task, emit_report, experiment, parse_config, read_runs_csv, run_experiment,
    run_single, sweep_w, write_sweep, ExperimentConfig, HarnessError, DEFAULT_W_VALUES,
    EXIT_DIVERGED,
};
use volsched::hessian::write_estimate_csv;
use volsched::trace_sim::{gbm_trace, regime_trace, write_trace_csv, GbmParams, RegimeTrace, Segment};
use volsched::trainer::{write_epochs_csv, write_steps_csv, ModelSnapshot};

#[derive(Parser)]
#[command(name = "volsched", version, about = "Volatility-adaptive learning-rate scheduling lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in [run]).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seed list (overrides `seeds` in [run]).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads (overrides `jobs` in [run]).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic accuracy trace as CSV.
    Simulate {
        #[arg(long, default_value_t = 0.5)]
        s0: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Regime segments `len:mu:sigma,...`; replaces --mu/--sigma/--steps.
        #[arg(long)]
        segments: Option<String>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a single (scheduler, seed) run.
    Train {
        #[command(flatten)]
        common: Common,
        /// Scheduler section name; defaults to the first one.
        #[arg(long)]
        scheduler: Option<String>,
    },
    /// Paired multi-seed comparison of every configured scheduler.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Probe λ_max of every trained model.
        #[arg(long)]
        hessian: bool,
    },
    /// Sweep the VolSched weight w against a cosine baseline.
    SweepW {
        #[command(flatten)]
        common: Common,
        /// Comma-separated w values.
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<f64>>,
    },
    /// Estimate λ_max of a saved parameter snapshot.
    Hessian {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild summary.csv and pairs.csv from an experiment's runs.csv.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(&common.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &common.out {
        cfg.run.out = out.clone();
    }
    if let Some(seeds) = &common.seeds {
        if seeds.is_empty() {
            return Err(HarnessError::Invalid("--seeds must not be empty".into()));
        }
        cfg.run.seeds = seeds.clone();
    }
    if let Some(jobs) = common.jobs {
        cfg.run.jobs = jobs.max(1);
    }
    Ok(cfg)
}

fn parse_segments(text: &str) -> Result<Vec<Segment>, HarnessError> {
    text.split(',')
        .map(|part| {
            let fields: Vec<&str> = part.trim().split(':').collect();
            let bad = || HarnessError::Invalid(format!("segment `{part}` is not len:mu:sigma"));
            if fields.len() != 3 {
                return Err(bad());
            }
            Ok(Segment {
                length: fields[0].parse().map_err(|_| bad())?,
                mu: fields[1].parse().map_err(|_| bad())?,
                sigma: fields[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn diverged_code(diverged: bool) -> i32 {
    if diverged {
        eprintln!("warning: at least one run diverged");
        EXIT_DIVERGED
    } else {
        0
    }
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Simulate {
            s0,
            mu,
            sigma,
            dt,
            steps,
            seed,
            segments,
            out,
        } => {
            let values = match segments {
                Some(s) => regime_trace(&RegimeTrace {
                    segments: parse_segments(&s)?,
                    s0,
                    dt,
                    seed,
                })?,
                None => gbm_trace(&GbmParams {
                    s0,
                    mu,
                    sigma,
                    dt,
                    steps,
                    seed,
                })?,
            };
            write_trace_csv(&values, output(out.as_deref())?)?;
            Ok(0)
        }
        Command::Train { common, scheduler } => {
            let cfg = load(&common)?;
            let entry = match &scheduler {
                Some(name) => cfg
                    .scheduler(name)
                    .ok_or_else(|| HarnessError::Invalid(format!("no scheduler section [{name}]")))?,
                None => &cfg.schedulers[0],
            };
            let seed = cfg.run.seeds[0];
            let task = build_task(&cfg.task)?;
            let result = run_single(&cfg, &task, entry, seed)?;
            let dir = &cfg.run.out;
            fs::create_dir_all(dir)?;
            let stem = format!("{}_seed{seed}", file_stem(&entry.name));
            let rec = &result.outcome.record;
            write_steps_csv(rec, BufWriter::new(File::create(dir.join(format!("{stem}_steps.csv")))?))?;
            write_epochs_csv(rec, BufWriter::new(File::create(dir.join(format!("{stem}_epochs.csv")))?))?;
            result.outcome.snapshot.save(&dir.join(format!("{stem}.theta")))?;
            println!(
                "{} seed {seed}: test_acc {:.4} train_loss {:.4} max_lr {:.5}",
                entry.name, result.summary.final_test_acc, result.summary.final_train_loss, result.summary.max_lr
            );
            Ok(diverged_code(result.summary.diverged))
        }
        Command::Compare { common, hessian } => {
            let mut cfg = load(&common)?;
            cfg.run.probe_hessian |= hessian;
            let exp = run_experiment(&cfg)?;
            emit_report(&exp.report, &exp.runs, &cfg.run.out)?;
            for s in &exp.report.schedulers {
                println!("{:<24} {}", s.name, s.display());
            }
            Ok(diverged_code(exp.any_diverged()))
        }
        Command::SweepW { common, w } => {
            let cfg = load(&common)?;
            let w = w.unwrap_or_else(|| DEFAULT_W_VALUES.to_vec());
            let sweep = sweep_w(&cfg, &w)?;
            write_sweep(&sweep, &cfg.run.out)?;
            for r in &sweep.rows {
                println!("w = {:<8} {}  max_lr {:.5}", r.w, r.summary.display(), r.max_lr);
            }
            Ok(diverged_code(sweep.experiment.any_diverged()))
        }
        Command::Hessian {
            config,
            snapshot,
            seed,
            out,
        } => {
            let cfg = parse_config(&fs::read_to_string(config)?)?;
            let task = build_task(&cfg.task)?;
            let snap = ModelSnapshot::load(&snapshot)?;
            let est = experiment::probe(&cfg, &task, &snap.params, seed)?;
            write_estimate_csv(&est, output(out.as_deref())?)?;
            if est.negative_curvature {
                eprintln!("warning: dominant eigenvalue is negative");
            }
            Ok(0)
        }
        Command::Report { dir } => {
            let runs = read_runs_csv(File::open(dir.join("runs.csv"))?)?;
            let report = aggregate(runs);
            write_aggregate(&report, &dir)?;
            Ok(diverged_code(report.runs.iter().any(|r| r.diverged)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
