//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [task]
//! kind = blobs
//! hidden = 32, 32
//!
//! [volsched]
//! w = 0.05
//! N = 50
//! ```
//!
//! Sections: `task` (required), `optimizer`, `run`, and one section per
//! scheduler. A scheduler section is named after its family (`volsched`,
//! `cosine`, `exponential`, `plateau`), optionally followed by `:label` so
//! that one family can appear more than once. Omitted keys take the
//! defaults of the desk-scale recipe.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::hessian::ProbeSettings;
use crate::scheduler::{PlateauMode, SchedulerConfig, SchedulerKind};
use crate::trainer::{steps_per_epoch, BlobsSpec, SpiralsSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax(String),
    UnknownSection(String),
    DuplicateSection(String),
    UnknownKey { section: String, key: String },
    DuplicateKey(String),
    TypeMismatch { key: String, expected: &'static str, found: String },
    MissingSection(&'static str),
    NoSchedulers,
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    /// 1-based line number; for missing sections, the last line of input.
    pub line: usize,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            ConfigErrorKind::Syntax(s) => write!(f, "syntax error: {s}"),
            ConfigErrorKind::UnknownSection(s) => write!(f, "unknown section [{s}]"),
            ConfigErrorKind::DuplicateSection(s) => write!(f, "duplicate section [{s}]"),
            ConfigErrorKind::UnknownKey { section, key } => {
                write!(f, "unknown key `{key}` in [{section}]")
            }
            ConfigErrorKind::DuplicateKey(k) => write!(f, "duplicate key `{k}`"),
            ConfigErrorKind::TypeMismatch {
                key,
                expected,
                found,
            } => write!(f, "`{key}` expects {expected}, found `{found}`"),
            ConfigErrorKind::MissingSection(s) => write!(f, "missing required section [{s}]"),
            ConfigErrorKind::NoSchedulers => write!(f, "no schedulers configured"),
            ConfigErrorKind::Invalid(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskData {
    Blobs(BlobsSpec),
    Spirals(SpiralsSpec),
}

impl TaskData {
    pub fn features(&self) -> usize {
        match self {
            TaskData::Blobs(b) => b.features,
            TaskData::Spirals(_) => 2,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            TaskData::Blobs(b) => b.classes,
            TaskData::Spirals(_) => 2,
        }
    }

    pub fn train_len(&self) -> usize {
        match self {
            TaskData::Blobs(b) => b.classes * b.train_per_class,
            TaskData::Spirals(s) => 2 * s.train_per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub data: TaskData,
    pub hidden: Vec<usize>,
}

impl TaskConfig {
    pub fn layers(&self) -> Vec<usize> {
        let mut layers = vec![self.data.features()];
        layers.extend(&self.hidden);
        layers.push(self.data.classes());
        layers
    }
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            data: TaskData::Blobs(BlobsSpec::default()),
            hidden: vec![32, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub eta_min: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            eta_min: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub jobs: usize,
    pub probe_hessian: bool,
    pub hessian: ProbeSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            seeds: vec![8, 42, 123],
            out: PathBuf::from("results"),
            jobs: 1,
            probe_hessian: false,
            hessian: ProbeSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerEntry {
    /// Section name, used as the label in every output file.
    pub name: String,
    pub kind: SchedulerKind,
    pub warmup_epochs: usize,
    pub start_factor: f64,
    pub window_n: usize,
    pub weight_w: f64,
    pub epsilon: f64,
    pub max_lr_cap: Option<f64>,
}

impl SchedulerEntry {
    pub fn new(name: &str, kind: SchedulerKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
            warmup_epochs: 1,
            start_factor: 0.01,
            window_n: 50,
            weight_w: 0.05,
            epsilon: 1e-8,
            max_lr_cap: None,
        }
    }

    pub fn default_for(family: &str, name: &str) -> Option<Self> {
        let kind = match family {
            "volsched" => SchedulerKind::VolSched,
            "cosine" => SchedulerKind::Cosine,
            "exponential" => SchedulerKind::Exponential { gamma: 0.95 },
            "plateau" => SchedulerKind::Plateau {
                mode: PlateauMode::Max,
                factor: 0.5,
                patience: 10,
            },
            _ => return None,
        };
        Some(Self::new(name, kind))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: TaskConfig,
    pub optimizer: OptimizerConfig,
    pub run: RunConfig,
    pub schedulers: Vec<SchedulerEntry>,
}

impl ExperimentConfig {
    pub fn steps_per_epoch(&self) -> usize {
        steps_per_epoch(self.task.data.train_len(), self.run.batch_size)
    }

    pub fn total_steps(&self) -> usize {
        self.run.epochs * self.steps_per_epoch()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.run.epochs,
            batch_size: self.run.batch_size,
            momentum: self.optimizer.momentum,
            weight_decay: self.optimizer.weight_decay,
        }
    }

    pub fn scheduler_config(&self, entry: &SchedulerEntry) -> SchedulerConfig {
        SchedulerConfig {
            base_lr: self.optimizer.lr,
            eta_min: self.optimizer.eta_min,
            t_max: self.total_steps(),
            window_n: entry.window_n,
            weight_w: entry.weight_w,
            epsilon: entry.epsilon,
            warmup_steps: entry.warmup_epochs * self.steps_per_epoch(),
            start_factor: entry.start_factor,
            max_lr_cap: entry.max_lr_cap,
        }
    }

    pub fn scheduler(&self, name: &str) -> Option<&SchedulerEntry> {
        self.schedulers.iter().find(|s| s.name == name)
    }

    /// Serialize to the text format; `parse_config` of the result yields an
    /// equal config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let t = &self.task;
        s.push_str("[task]\n");
        match &t.data {
            TaskData::Blobs(b) => {
                let _ = writeln!(s, "kind = blobs");
                let _ = writeln!(s, "classes = {}", b.classes);
                let _ = writeln!(s, "train_per_class = {}", b.train_per_class);
                let _ = writeln!(s, "test_per_class = {}", b.test_per_class);
                let _ = writeln!(s, "features = {}", b.features);
                let _ = writeln!(s, "spread = {}", b.spread);
                let _ = writeln!(s, "noise = {}", b.noise);
                let _ = writeln!(s, "data_seed = {}", b.seed);
            }
            TaskData::Spirals(p) => {
                let _ = writeln!(s, "kind = spirals");
                let _ = writeln!(s, "train_per_class = {}", p.train_per_class);
                let _ = writeln!(s, "test_per_class = {}", p.test_per_class);
                let _ = writeln!(s, "turns = {}", p.turns);
                let _ = writeln!(s, "noise = {}", p.noise);
                let _ = writeln!(s, "data_seed = {}", p.seed);
            }
        }
        let _ = writeln!(s, "hidden = {}", join(&t.hidden));

        let o = &self.optimizer;
        let _ = writeln!(s, "\n[optimizer]");
        let _ = writeln!(s, "lr = {}", o.lr);
        let _ = writeln!(s, "momentum = {}", o.momentum);
        let _ = writeln!(s, "weight_decay = {}", o.weight_decay);
        let _ = writeln!(s, "eta_min = {}", o.eta_min);

        let r = &self.run;
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "epochs = {}", r.epochs);
        let _ = writeln!(s, "batch_size = {}", r.batch_size);
        let _ = writeln!(s, "seeds = {}", join(&r.seeds));
        let _ = writeln!(s, "out = {}", r.out.display());
        let _ = writeln!(s, "jobs = {}", r.jobs);
        let _ = writeln!(s, "probe_hessian = {}", r.probe_hessian);
        let _ = writeln!(s, "hessian_fd_base = {}", r.hessian.fd_base);
        let _ = writeln!(s, "hessian_tol = {}", r.hessian.tol);
        let _ = writeln!(s, "hessian_max_iters = {}", r.hessian.max_iters);

        for e in &self.schedulers {
            let _ = writeln!(s, "\n[{}]", e.name);
            let _ = writeln!(s, "warmup_epochs = {}", e.warmup_epochs);
            let _ = writeln!(s, "start_factor = {}", e.start_factor);
            match &e.kind {
                SchedulerKind::VolSched => {
                    let _ = writeln!(s, "w = {}", e.weight_w);
                    let _ = writeln!(s, "N = {}", e.window_n);
                    let _ = writeln!(s, "epsilon = {}", e.epsilon);
                    match e.max_lr_cap {
                        Some(c) => {
                            let _ = writeln!(s, "max_lr_cap = {c}");
                        }
                        None => {
                            let _ = writeln!(s, "max_lr_cap = none");
                        }
                    }
                }
                SchedulerKind::Cosine => {}
                SchedulerKind::Exponential { gamma } => {
                    let _ = writeln!(s, "gamma = {gamma}");
                }
                SchedulerKind::Plateau {
                    mode,
                    factor,
                    patience,
                } => {
                    let _ = writeln!(s, "mode = {mode}");
                    let _ = writeln!(s, "factor = {factor}");
                    let _ = writeln!(s, "patience = {patience}");
                }
            }
        }
        s
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

struct Entry<'a> {
    key: &'a str,
    value: &'a str,
    line: usize,
}

struct Section<'a> {
    name: &'a str,
    line: usize,
    entries: Vec<Entry<'a>>,
}

fn err(line: usize, kind: ConfigErrorKind) -> ConfigError {
    ConfigError { line, kind }
}

fn split_sections(text: &str) -> Result<Vec<Section<'_>>, ConfigError> {
    let mut sections: Vec<Section<'_>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, ConfigErrorKind::Syntax("unterminated section header".into())))?
                .trim();
            if name.is_empty() {
                return Err(err(line, ConfigErrorKind::Syntax("empty section name".into())));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(err(line, ConfigErrorKind::DuplicateSection(name.into())));
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            err(
                line,
                ConfigErrorKind::Syntax(format!("expected `key = value`, found `{content}`")),
            )
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err(line, ConfigErrorKind::Syntax("empty key".into())));
        }
        let section = sections.last_mut().ok_or_else(|| {
            err(
                line,
                ConfigErrorKind::Syntax("key outside of any section".into()),
            )
        })?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(err(line, ConfigErrorKind::DuplicateKey(key.into())));
        }
        section.entries.push(Entry { key, value, line });
    }
    Ok(sections)
}

fn typed<T: FromStr>(e: &Entry<'_>, expected: &'static str) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| {
        err(
            e.line,
            ConfigErrorKind::TypeMismatch {
                key: e.key.into(),
                expected,
                found: e.value.into(),
            },
        )
    })
}

fn list<T: FromStr>(e: &Entry<'_>, expected: &'static str) -> Result<Vec<T>, ConfigError> {
    let v = e.value.trim_start_matches('[').trim_end_matches(']').trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            item.trim().parse().map_err(|_| {
                err(
                    e.line,
                    ConfigErrorKind::TypeMismatch {
                        key: e.key.into(),
                        expected,
                        found: e.value.into(),
                    },
                )
            })
        })
        .collect()
}

fn unknown(section: &str, e: &Entry<'_>) -> ConfigError {
    err(
        e.line,
        ConfigErrorKind::UnknownKey {
            section: section.into(),
            key: e.key.into(),
        },
    )
}

fn invalid(line: usize, msg: String) -> ConfigError {
    err(line, ConfigErrorKind::Invalid(msg))
}

fn parse_task(sec: &Section<'_>) -> Result<TaskConfig, ConfigError> {
    let kind = sec
        .entries
        .iter()
        .find(|e| e.key == "kind")
        .map(|e| (e.value, e.line))
        .unwrap_or(("blobs", sec.line));
    let mut hidden = vec![32, 32];
    let data = match kind.0 {
        "blobs" => {
            let mut b = BlobsSpec::default();
            for e in &sec.entries {
                match e.key {
                    "kind" => {}
                    "classes" => b.classes = typed(e, "an integer")?,
                    "train_per_class" => b.train_per_class = typed(e, "an integer")?,
                    "test_per_class" => b.test_per_class = typed(e, "an integer")?,
                    "features" => b.features = typed(e, "an integer")?,
                    "spread" => b.spread = typed(e, "a number")?,
                    "noise" => b.noise = typed(e, "a number")?,
                    "data_seed" => b.seed = typed(e, "an integer")?,
                    "hidden" => hidden = list(e, "a list of integers")?,
                    _ => return Err(unknown(sec.name, e)),
                }
            }
            if b.classes < 2 {
                return Err(invalid(sec.line, "blobs need at least 2 classes".into()));
            }
            if b.train_per_class == 0 || b.test_per_class == 0 || b.features == 0 {
                return Err(invalid(
                    sec.line,
                    "blobs need positive per-class counts and features".into(),
                ));
            }
            if b.spread < 0.0 || b.noise < 0.0 {
                return Err(invalid(sec.line, "spread and noise must be non-negative".into()));
            }
            TaskData::Blobs(b)
        }
        "spirals" => {
            let mut p = SpiralsSpec::default();
            for e in &sec.entries {
                match e.key {
                    "kind" => {}
                    "train_per_class" => p.train_per_class = typed(e, "an integer")?,
                    "test_per_class" => p.test_per_class = typed(e, "an integer")?,
                    "turns" => p.turns = typed(e, "a number")?,
                    "noise" => p.noise = typed(e, "a number")?,
                    "data_seed" => p.seed = typed(e, "an integer")?,
                    "hidden" => hidden = list(e, "a list of integers")?,
                    _ => return Err(unknown(sec.name, e)),
                }
            }
            if p.train_per_class == 0 || p.test_per_class == 0 {
                return Err(invalid(sec.line, "spirals need positive per-class counts".into()));
            }
            if p.noise < 0.0 || p.turns <= 0.0 {
                return Err(invalid(
                    sec.line,
                    "spiral noise must be non-negative and turns positive".into(),
                ));
            }
            TaskData::Spirals(p)
        }
        other => {
            return Err(err(
                kind.1,
                ConfigErrorKind::TypeMismatch {
                    key: "kind".into(),
                    expected: "`blobs` or `spirals`",
                    found: other.into(),
                },
            ))
        }
    };
    if hidden.contains(&0) {
        return Err(invalid(sec.line, "hidden layer sizes must be positive".into()));
    }
    Ok(TaskConfig { data, hidden })
}

fn parse_optimizer(sec: &Section<'_>) -> Result<OptimizerConfig, ConfigError> {
    let mut o = OptimizerConfig::default();
    for e in &sec.entries {
        match e.key {
            "lr" => o.lr = typed(e, "a number")?,
            "momentum" => o.momentum = typed(e, "a number")?,
            "weight_decay" => o.weight_decay = typed(e, "a number")?,
            "eta_min" => o.eta_min = typed(e, "a number")?,
            _ => return Err(unknown(sec.name, e)),
        }
    }
    if !(o.lr > 0.0) {
        return Err(invalid(sec.line, "lr must be positive".into()));
    }
    if !(o.eta_min >= 0.0 && o.eta_min <= o.lr) {
        return Err(invalid(sec.line, "eta_min must lie in [0, lr]".into()));
    }
    if !(0.0..1.0).contains(&o.momentum) || o.weight_decay < 0.0 {
        return Err(invalid(
            sec.line,
            "momentum must lie in [0, 1) and weight_decay be non-negative".into(),
        ));
    }
    Ok(o)
}

fn parse_run(sec: &Section<'_>) -> Result<RunConfig, ConfigError> {
    let mut r = RunConfig::default();
    for e in &sec.entries {
        match e.key {
            "epochs" => r.epochs = typed(e, "an integer")?,
            "batch_size" => r.batch_size = typed(e, "an integer")?,
            "seeds" => r.seeds = list(e, "a list of integers")?,
            "out" => r.out = PathBuf::from(e.value),
            "jobs" => r.jobs = typed(e, "an integer")?,
            "probe_hessian" => r.probe_hessian = typed(e, "`true` or `false`")?,
            "hessian_fd_base" => r.hessian.fd_base = typed(e, "a number")?,
            "hessian_tol" => r.hessian.tol = typed(e, "a number")?,
            "hessian_max_iters" => r.hessian.max_iters = typed(e, "an integer")?,
            _ => return Err(unknown(sec.name, e)),
        }
    }
    if r.epochs == 0 || r.batch_size == 0 || r.jobs == 0 {
        return Err(invalid(sec.line, "epochs, batch_size and jobs must be positive".into()));
    }
    if r.seeds.is_empty() {
        return Err(invalid(sec.line, "at least one seed is required".into()));
    }
    let h = &r.hessian;
    if !(h.fd_base > 0.0 && h.tol > 0.0 && h.max_iters > 0) {
        return Err(invalid(sec.line, "hessian settings must be positive".into()));
    }
    Ok(r)
}

fn parse_scheduler(sec: &Section<'_>, family: &str) -> Result<SchedulerEntry, ConfigError> {
    let mut s = SchedulerEntry::default_for(family, sec.name)
        .ok_or_else(|| err(sec.line, ConfigErrorKind::UnknownSection(sec.name.into())))?;
    for e in &sec.entries {
        match (e.key, &mut s.kind) {
            ("warmup_epochs", _) => s.warmup_epochs = typed(e, "an integer")?,
            ("start_factor", _) => s.start_factor = typed(e, "a number")?,
            ("w", SchedulerKind::VolSched) => s.weight_w = typed(e, "a number")?,
            ("N", SchedulerKind::VolSched) => s.window_n = typed(e, "an integer")?,
            ("epsilon", SchedulerKind::VolSched) => s.epsilon = typed(e, "a number")?,
            ("max_lr_cap", SchedulerKind::VolSched) => {
                s.max_lr_cap = match e.value {
                    "none" => None,
                    _ => Some(typed(e, "a number or `none`")?),
                }
            }
            ("gamma", SchedulerKind::Exponential { gamma }) => *gamma = typed(e, "a number")?,
            ("mode", SchedulerKind::Plateau { mode, .. }) => *mode = typed(e, "`min` or `max`")?,
            ("factor", SchedulerKind::Plateau { factor, .. }) => *factor = typed(e, "a number")?,
            ("patience", SchedulerKind::Plateau { patience, .. }) => {
                *patience = typed(e, "an integer")?
            }
            _ => return Err(unknown(sec.name, e)),
        }
    }
    let bad = |msg: &str| Err(invalid(sec.line, format!("[{}]: {msg}", sec.name)));
    if !(s.start_factor > 0.0 && s.start_factor <= 1.0) {
        return bad("start_factor must lie in (0, 1]");
    }
    match s.kind {
        SchedulerKind::VolSched => {
            if s.window_n < 2 {
                return bad("N must be at least 2");
            }
            if !(s.weight_w >= 0.0 && s.weight_w.is_finite()) {
                return bad("w must be non-negative");
            }
            if !(s.epsilon > 0.0) {
                return bad("epsilon must be positive");
            }
            if matches!(s.max_lr_cap, Some(c) if !(c > 0.0)) {
                return bad("max_lr_cap must be positive");
            }
        }
        SchedulerKind::Exponential { gamma } if !(gamma > 0.0 && gamma < 1.0) => {
            return bad("gamma must lie in (0, 1)");
        }
        SchedulerKind::Plateau { factor, .. } if !(factor > 0.0 && factor < 1.0) => {
            return bad("factor must lie in (0, 1)");
        }
        _ => {}
    }
    Ok(s)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let sections = split_sections(text)?;
    let last_line = text.lines().count().max(1);
    let mut task = None;
    let mut optimizer = OptimizerConfig::default();
    let mut run = RunConfig::default();
    let mut schedulers = Vec::new();
    let mut scheduler_lines = Vec::new();
    for sec in &sections {
        match sec.name {
            "task" => task = Some(parse_task(sec)?),
            "optimizer" => optimizer = parse_optimizer(sec)?,
            "run" => run = parse_run(sec)?,
            name => {
                let family = name.split_once(':').map_or(name, |(f, _)| f);
                schedulers.push(parse_scheduler(sec, family)?);
                scheduler_lines.push(sec.line);
            }
        }
    }
    let task = task.ok_or_else(|| err(last_line, ConfigErrorKind::MissingSection("task")))?;
    if schedulers.is_empty() {
        return Err(err(last_line, ConfigErrorKind::NoSchedulers));
    }
    let cfg = ExperimentConfig {
        task,
        optimizer,
        run,
        schedulers,
    };
    for (entry, &line) in cfg.schedulers.iter().zip(&scheduler_lines) {
        let sc = cfg.scheduler_config(entry);
        let checked = match entry.kind {
            SchedulerKind::VolSched => sc.validate_volsched(),
            _ => sc.validate(),
        };
        checked.map_err(|e| invalid(line, format!("[{}]: {e}", entry.name)))?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# desk-scale recipe
[task]
kind = blobs
classes = 4
train_per_class = 50
test_per_class = 10
hidden = 16, 8

[optimizer]
lr = 0.1

[run]
epochs = 30
seeds = 8, 42, 123

[volsched]
w = 0.05
N = 50

[cosine]
[exponential]
gamma = 0.95
[plateau:slow]
mode = max
factor = 0.5
patience = 10
";

    #[test]
    fn parses_volsched_params() {
        let cfg = parse_config(FULL).unwrap();
        let v = cfg.scheduler("volsched").unwrap();
        assert_eq!(v.weight_w, 0.05);
        assert_eq!(v.window_n, 50);
        assert_eq!(cfg.run.seeds, vec![8, 42, 123]);
        assert_eq!(cfg.task.layers(), vec![2, 16, 8, 4]);
        assert_eq!(cfg.schedulers.len(), 4);
        assert_eq!(cfg.schedulers[3].name, "plateau:slow");
        assert_eq!(cfg.steps_per_epoch(), 4);
    }

    #[test]
    fn serialization_reparses_equal() {
        let cfg = parse_config(FULL).unwrap();
        let again = parse_config(&cfg.to_config_text()).unwrap();
        assert_eq!(cfg, again);
        let spirals = "[task]\nkind = spirals\nnoise = 0.1\n[cosine]\n[run]\nepochs=3\n";
        let cfg = parse_config(spirals).unwrap();
        assert_eq!(parse_config(&cfg.to_config_text()).unwrap(), cfg);
    }

    #[test]
    fn no_schedulers() {
        let e = parse_config("[task]\nkind = blobs\n[run]\nepochs = 2\n").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::NoSchedulers);
        assert_eq!(e.to_string(), "line 4: no schedulers configured");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("[task]\nkind = blobs\nbogus = 1\n[cosine]\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ConfigErrorKind::UnknownKey { .. }));

        let e = parse_config("[task]\nclasses = many\n[cosine]\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(e.kind, ConfigErrorKind::TypeMismatch { .. }));

        let e = parse_config("[cosine]\n[run]\nepochs = 3\n").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::MissingSection("task"));

        let e = parse_config("[task]\n[adamw]\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(e.kind, ConfigErrorKind::UnknownSection(_)));

        // `w` belongs to volsched only
        let e = parse_config("[task]\n[cosine]\nw = 0.1\n").unwrap_err();
        assert_eq!(e.line, 3);

        let e = parse_config("[task]\n[exponential]\ngamma = 1.5\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("gamma"));
    }

    #[test]
    fn window_must_fit_schedule() {
        let text = "[task]\ntrain_per_class = 10\nclasses = 2\n[run]\nepochs = 2\n[volsched]\nN = 50\n";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.line, 6);
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse_config("[task]\n[volsched]\n").unwrap();
        let v = &cfg.schedulers[0];
        assert_eq!(v.warmup_epochs, 1);
        assert_eq!(v.start_factor, 0.01);
        assert_eq!(cfg.optimizer, OptimizerConfig::default());
        assert_eq!(cfg.run.batch_size, 64);
        assert_eq!(cfg.total_steps(), 40 * 63);
    }
}
