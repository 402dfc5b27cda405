use std::f64::consts::PI;

use super::TrainError;
use crate::rng::{derive_seed, Gaussian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn tag(self) -> u64 {
        match self {
            Split::Train => 0x7472_6169_6e,
            Split::Test => 0x7465_7374,
        }
    }
}

/// Row-major feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
    pub features: usize,
    pub classes: usize,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    pub fn as_batch(&self) -> Batch<'_> {
        Batch {
            inputs: &self.inputs,
            labels: &self.labels,
            features: self.features,
        }
    }

    /// Copy the given rows, in order, into an owned batch.
    pub fn gather(&self, indices: &[usize]) -> OwnedBatch {
        let mut inputs = Vec::with_capacity(indices.len() * self.features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        OwnedBatch {
            inputs,
            labels,
            features: self.features,
        }
    }
}

/// Borrowed view of a batch of samples.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub inputs: &'a [f64],
    pub labels: &'a [usize],
    pub features: usize,
}

impl Batch<'_> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OwnedBatch {
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
    pub features: usize,
}

impl OwnedBatch {
    pub fn view(&self) -> Batch<'_> {
        Batch {
            inputs: &self.inputs,
            labels: &self.labels,
            features: self.features,
        }
    }
}

/// Isotropic Gaussian blobs around seeded random centers.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobsSpec {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub features: usize,
    /// Standard deviation of each center coordinate.
    pub spread: f64,
    /// Standard deviation of each sample around its center.
    pub noise: f64,
    pub seed: u64,
}

impl Default for BlobsSpec {
    fn default() -> Self {
        Self {
            classes: 8,
            train_per_class: 500,
            test_per_class: 125,
            features: 2,
            spread: 2.0,
            noise: 0.6,
            seed: 0,
        }
    }
}

/// Two interleaved spiral arms; class `c` lies along
/// `r · (cos(2π·turns·r + cπ), sin(2π·turns·r + cπ))` for `r ∈ [0.05, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralsSpec {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub turns: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SpiralsSpec {
    fn default() -> Self {
        Self {
            train_per_class: 500,
            test_per_class: 125,
            turns: 1.5,
            noise: 0.05,
            seed: 0,
        }
    }
}

fn per_class(split: Split, train: usize, test: usize) -> usize {
    match split {
        Split::Train => train,
        Split::Test => test,
    }
}

/// Samples are interleaved by class (0, 1, …, k−1, 0, 1, …).
pub fn make_blobs(spec: &BlobsSpec, split: Split) -> Result<Dataset, TrainError> {
    let n = per_class(split, spec.train_per_class, spec.test_per_class);
    if spec.classes < 2 {
        return Err(TrainError::InvalidSpec(format!(
            "blobs need at least 2 classes, got {}",
            spec.classes
        )));
    }
    if n == 0 || spec.features == 0 {
        return Err(TrainError::InvalidSpec(
            "blobs need at least one sample per class and one feature".into(),
        ));
    }
    if !(spec.spread >= 0.0 && spec.noise >= 0.0) {
        return Err(TrainError::InvalidSpec("spread and noise must be non-negative".into()));
    }
    let mut center_rng = Gaussian::new(derive_seed(spec.seed, 0x63656e74));
    let centers: Vec<f64> = (0..spec.classes * spec.features)
        .map(|_| spec.spread * center_rng.standard_normal())
        .collect();
    let mut rng = Gaussian::new(derive_seed(spec.seed, split.tag()));
    let mut inputs = Vec::with_capacity(n * spec.classes * spec.features);
    let mut labels = Vec::with_capacity(n * spec.classes);
    for _ in 0..n {
        for c in 0..spec.classes {
            let center = &centers[c * spec.features..(c + 1) * spec.features];
            for &mu in center {
                inputs.push(mu + spec.noise * rng.standard_normal());
            }
            labels.push(c);
        }
    }
    Ok(Dataset {
        inputs,
        labels,
        features: spec.features,
        classes: spec.classes,
        split,
    })
}

pub fn make_spirals(spec: &SpiralsSpec, split: Split) -> Result<Dataset, TrainError> {
    let n = per_class(split, spec.train_per_class, spec.test_per_class);
    if n == 0 {
        return Err(TrainError::InvalidSpec(
            "spirals need at least one sample per class".into(),
        ));
    }
    if !(spec.noise >= 0.0 && spec.turns > 0.0) {
        return Err(TrainError::InvalidSpec(
            "spiral noise must be non-negative and turns positive".into(),
        ));
    }
    let mut rng = Gaussian::new(derive_seed(spec.seed, split.tag()));
    let mut inputs = Vec::with_capacity(4 * n);
    let mut labels = Vec::with_capacity(2 * n);
    for _ in 0..n {
        for c in 0..2 {
            let r = rng.uniform(0.05, 1.0);
            let angle = 2.0 * PI * spec.turns * r + c as f64 * PI;
            inputs.push(r * angle.cos() + spec.noise * rng.standard_normal());
            inputs.push(r * angle.sin() + spec.noise * rng.standard_normal());
            labels.push(c);
        }
    }
    Ok(Dataset {
        inputs,
        labels,
        features: 2,
        classes: 2,
        split,
    })
}
