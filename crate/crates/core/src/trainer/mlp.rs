//! Fully connected tanh network with a softmax cross-entropy head.
//!
//! Parameter layout (flat `f64` vector): every weight matrix in layer order,
//! then every bias vector in layer order. The weight matrix of a layer with
//! `fan_in → fan_out` is stored row-major as `[fan_out][fan_in]`.

use rand::Rng;

use super::data::Batch;
use super::TrainError;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    layers: Vec<usize>,
    weight_offsets: Vec<usize>,
    bias_offsets: Vec<usize>,
    param_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub accuracy: f64,
}

impl Mlp {
    pub fn new(layers: Vec<usize>) -> Result<Self, TrainError> {
        if layers.len() < 2 || layers.contains(&0) {
            return Err(TrainError::InvalidSpec(format!(
                "layer sizes must have at least two non-zero entries, got {layers:?}"
            )));
        }
        let mut weight_offsets = Vec::with_capacity(layers.len() - 1);
        let mut offset = 0;
        for pair in layers.windows(2) {
            weight_offsets.push(offset);
            offset += pair[0] * pair[1];
        }
        let mut bias_offsets = Vec::with_capacity(layers.len() - 1);
        for &fan_out in &layers[1..] {
            bias_offsets.push(offset);
            offset += fan_out;
        }
        Ok(Self {
            layers,
            weight_offsets,
            bias_offsets,
            param_count: offset,
        })
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn inputs(&self) -> usize {
        self.layers[0]
    }

    pub fn classes(&self) -> usize {
        *self.layers.last().expect("at least two layers")
    }

    fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        let mut params = vec![0.0; self.param_count];
        for (l, pair) in self.layers.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = self.weight_offsets[l];
            for w in &mut params[start..start + fan_in * fan_out] {
                *w = rng.random_range(-limit..limit);
            }
        }
        params
    }

    fn check(&self, params: &[f64], batch: &Batch<'_>) -> Result<(), TrainError> {
        if params.len() != self.param_count {
            return Err(TrainError::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count,
                params.len()
            )));
        }
        if batch.features != self.inputs() || batch.inputs.len() != batch.len() * batch.features
        {
            return Err(TrainError::ShapeMismatch(format!(
                "batch has {} features, network expects {}",
                batch.features,
                self.inputs()
            )));
        }
        Ok(())
    }

    /// Forward one sample. `acts[l]` receives the activation of layer `l`
    /// (`acts[0]` is the input; the last entry holds the logits).
    fn forward_sample(&self, params: &[f64], x: &[f64], acts: &mut [Vec<f64>]) {
        acts[0].copy_from_slice(x);
        let depth = self.depth();
        for l in 0..depth {
            let (fan_in, fan_out) = (self.layers[l], self.layers[l + 1]);
            let w = &params[self.weight_offsets[l]..self.weight_offsets[l] + fan_in * fan_out];
            let b = &params[self.bias_offsets[l]..self.bias_offsets[l] + fan_out];
            let (prev, next) = acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                out[o] = if l + 1 < depth { z.tanh() } else { z };
            }
        }
    }

    fn activation_buffers(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|&n| vec![0.0; n]).collect()
    }

    pub fn forward(&self, params: &[f64], batch: &Batch<'_>) -> Result<ForwardOutput, TrainError> {
        self.check(params, batch)?;
        let k = self.classes();
        let mut acts = self.activation_buffers();
        let mut logits = Vec::with_capacity(batch.len() * k);
        let mut probs = Vec::with_capacity(batch.len() * k);
        for i in 0..batch.len() {
            let x = &batch.inputs[i * batch.features..(i + 1) * batch.features];
            self.forward_sample(params, x, &mut acts);
            let z = acts.last().expect("output layer");
            logits.extend_from_slice(z);
            let start = probs.len();
            probs.resize(start + k, 0.0);
            softmax(z, &mut probs[start..]);
        }
        Ok(ForwardOutput {
            logits,
            probs,
            classes: k,
        })
    }

    /// Mean cross-entropy loss and accuracy, no gradient.
    pub fn loss_accuracy(&self, params: &[f64], batch: &Batch<'_>) -> Result<(f64, f64), TrainError> {
        self.check(params, batch)?;
        if batch.is_empty() {
            return Err(TrainError::InvalidSpec("empty batch".into()));
        }
        let mut acts = self.activation_buffers();
        let mut loss = 0.0;
        let mut correct = 0usize;
        for i in 0..batch.len() {
            let x = &batch.inputs[i * batch.features..(i + 1) * batch.features];
            self.forward_sample(params, x, &mut acts);
            let z = acts.last().expect("output layer");
            let y = batch.labels[i];
            loss += log_sum_exp(z) - z[y];
            if argmax(z) == y {
                correct += 1;
            }
        }
        let n = batch.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }

    /// Mean cross-entropy, its gradient by backpropagation, and accuracy.
    /// Argmax ties go to the lowest class index.
    pub fn loss_grad_accuracy(
        &self,
        params: &[f64],
        batch: &Batch<'_>,
    ) -> Result<LossGrad, TrainError> {
        self.check(params, batch)?;
        if batch.is_empty() {
            return Err(TrainError::InvalidSpec("empty batch".into()));
        }
        let depth = self.depth();
        let mut acts = self.activation_buffers();
        let mut deltas = self.activation_buffers();
        let mut grad = vec![0.0; self.param_count];
        let mut loss = 0.0;
        let mut correct = 0usize;

        for i in 0..batch.len() {
            let x = &batch.inputs[i * batch.features..(i + 1) * batch.features];
            self.forward_sample(params, x, &mut acts);
            let y = batch.labels[i];
            {
                let z = &acts[depth];
                loss += log_sum_exp(z) - z[y];
                if argmax(z) == y {
                    correct += 1;
                }
                softmax(z, &mut deltas[depth]);
                deltas[depth][y] -= 1.0;
            }
            for l in (0..depth).rev() {
                let (fan_in, fan_out) = (self.layers[l], self.layers[l + 1]);
                let w_off = self.weight_offsets[l];
                let b_off = self.bias_offsets[l];
                {
                    let delta = &deltas[l + 1];
                    let input = &acts[l];
                    for o in 0..fan_out {
                        let d = delta[o];
                        grad[b_off + o] += d;
                        let g_row = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                        for (g, a) in g_row.iter_mut().zip(input) {
                            *g += d * a;
                        }
                    }
                }
                if l > 0 {
                    let w = &params[w_off..w_off + fan_in * fan_out];
                    let (lower, upper) = deltas.split_at_mut(l + 1);
                    let delta = &upper[0];
                    let back = &mut lower[l];
                    back.iter_mut().for_each(|v| *v = 0.0);
                    for o in 0..fan_out {
                        let d = delta[o];
                        for (b, wv) in back.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                            *b += wv * d;
                        }
                    }
                    for (b, h) in back.iter_mut().zip(&acts[l]) {
                        *b *= 1.0 - h * h;
                    }
                }
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok(LossGrad {
            loss: loss / n,
            grad,
            accuracy: correct as f64 / n,
        })
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64], out: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, v) in out.iter_mut().zip(z) {
        *o = (v - m).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}
