use std::fs;

use volsched::harness::experiment::initial_params;
use volsched::harness::sweep::sweep_config;
use volsched::harness::{build_task, emit_report, parse_config, run_experiment, sweep_w, write_sweep};

const SMALL: &str = "
[task]
kind = blobs
classes = 3
train_per_class = 40
test_per_class = 10
hidden = 8
[optimizer]
eta_min = 0
[run]
epochs = 6
seeds = 8, 42, 123
[volsched]
N = 5
[cosine]
";

#[test]
fn paired_design_and_run_count() {
    let cfg = parse_config(SMALL).unwrap();
    let exp = run_experiment(&cfg).unwrap();
    assert_eq!(exp.runs.len(), 6);
    assert_eq!(exp.report.schedulers.len(), 2);
    assert_eq!(exp.report.pairs.len(), 1);
    let task = build_task(&cfg.task).unwrap();
    for &seed in &cfg.run.seeds {
        // both schedulers start from the same bits
        let init = initial_params(&task, seed);
        let a = exp.run("volsched", seed).unwrap();
        let b = exp.run("cosine", seed).unwrap();
        assert_eq!(a.outcome.record.steps[0].train_loss, b.outcome.record.steps[0].train_loss);
        assert_eq!(init, task.model.init_params(seed));
    }
    assert_ne!(initial_params(&task, 8), initial_params(&task, 42));
}

#[test]
fn single_seed_single_scheduler() {
    let text = SMALL.replace("seeds = 8, 42, 123", "seeds = 8").replace("[cosine]\n", "");
    let exp = run_experiment(&parse_config(&text).unwrap()).unwrap();
    assert_eq!(exp.runs.len(), 1);
    let s = &exp.report.schedulers[0];
    assert!(s.single_seed);
    assert_eq!(s.std_acc, 0.0);
}

#[test]
fn divergence_is_a_flagged_row() {
    let text = "
[task]
kind = blobs
classes = 2
spread = 5
noise = 0.1
train_per_class = 500
test_per_class = 50
hidden = 16
[run]
epochs = 30
seeds = 1, 2, 8
[volsched:wild]
w = 5
warmup_epochs = 0
[cosine]
";
    let cfg = parse_config(text).unwrap();
    let exp = run_experiment(&cfg).unwrap();
    assert!(exp.any_diverged());
    let wild = exp.report.scheduler("volsched:wild").unwrap();
    // whether a run blows up is seed dependent; some only collapse to chance
    assert!(wild.diverged >= 1);
    assert_eq!(exp.report.scheduler("cosine").unwrap().diverged, 0);
    let dir = tempfile::tempdir().unwrap();
    emit_report(&exp.report, &exp.runs, dir.path()).unwrap();
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(runs.lines().any(|l| l.starts_with("volsched:wild,") && l.ends_with(",true")));
    assert!(dir.path().join("runs/volsched_wild_seed1_steps.csv").exists());
}

#[test]
fn zero_weight_sweep_row_matches_cosine() {
    let cfg = parse_config(&SMALL.replace("epochs = 6", "epochs = 30")).unwrap();
    let sweep = sweep_w(&cfg, &[0.0, 0.05]).unwrap();
    let sc = cfg.scheduler_config(cfg.scheduler("volsched").unwrap());
    for &seed in &cfg.run.seeds {
        let w0 = &sweep.experiment.run("w=0", seed).unwrap().outcome.record.steps;
        let cos = &sweep.experiment.run("cosine", seed).unwrap().outcome.record.steps;
        let mut checked = 0;
        for (a, b) in w0.iter().zip(cos) {
            let t = a.step.saturating_sub(sc.warmup_steps);
            // the multiplicative schedule only moves on update steps
            if a.step >= sc.warmup_steps && t % sc.window_n == 0 && t < sc.horizon() {
                assert!((a.lr - b.lr).abs() <= 1e-9 * b.lr, "step {}: {} vs {}", a.step, a.lr, b.lr);
                checked += 1;
            }
        }
        assert!(checked > 5);
    }
}

#[test]
fn sweep_outputs() {
    let cfg = parse_config(SMALL).unwrap();
    let swept = sweep_config(&cfg, &[0.01, 0.05, 0.1]).unwrap();
    let names: Vec<_> = swept.schedulers.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["cosine", "w=0.01", "w=0.05", "w=0.1"]);
    assert!(sweep_config(&cfg, &[0.1, 0.1]).is_err());
    let no_volsched = parse_config("[task]\n[cosine]\n").unwrap();
    assert!(sweep_config(&no_volsched, &[0.1]).is_err());

    let sweep = sweep_w(&cfg, &[0.01, 0.05, 0.1]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sweep(&sweep, dir.path()).unwrap();
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("w,mean_acc,std_acc,n_seeds,max_lr,display,t_vs_baseline,p_vs_baseline\n"));
    let lr = fs::read_to_string(dir.path().join("sweep_lr.csv")).unwrap();
    assert!(lr.starts_with("step,cosine,w=0.01,w=0.05,w=0.1\n"));
    assert_eq!(lr.lines().count(), 1 + cfg.total_steps());
}

#[test]
fn report_files_and_figure_layout() {
    let cfg = parse_config(&SMALL.replace("[run]", "[run]\nprobe_hessian = true\nhessian_max_iters = 30")).unwrap();
    let exp = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&exp.report, &exp.runs, dir.path()).unwrap();
    for f in ["summary.csv", "pairs.csv", "runs.csv", "fig_lr.csv", "fig_train_loss.csv", "fig_test_acc.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap().ends_with("mean_lambda_max,std_lambda_max"));
    let fig = fs::read_to_string(dir.path().join("fig_test_acc.csv")).unwrap();
    assert!(fig.starts_with("step,volsched,cosine\n"));
    assert_eq!(fig.lines().count(), 1 + cfg.run.epochs);
    let pairs = fs::read_to_string(dir.path().join("pairs.csv")).unwrap();
    assert!(pairs.starts_with("a,b,t,dof,p\nvolsched,cosine,"));
    let steps = fs::read_to_string(dir.path().join("runs/volsched_seed8_steps.csv")).unwrap();
    assert!(steps.starts_with("step,epoch,lr,train_loss,train_acc\n0,1,"));
}
