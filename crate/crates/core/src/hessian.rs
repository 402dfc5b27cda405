//! Top Hessian eigenvalue by power iteration over finite-difference
//! Hessian-vector products.
//!
//! `Hv ≈ (∇L(θ + h v) − ∇L(θ − h v)) / 2h` with `h = fd_base · (1 + ‖θ‖∞)`.
//! Power iteration runs from a seeded random unit vector and reports the
//! Rayleigh quotient `vᵀHv`.

use std::io::Write;

use thiserror::Error;

use crate::rng::{derive_seed, Gaussian};
use crate::trainer::{Dataset, Mlp, TrainError};

#[derive(Debug, Error)]
pub enum HessianError {
    #[error("gradient evaluation produced a non-finite value")]
    NonFiniteGradient,
    #[error("Hessian-vector product vanished from {0} random starts")]
    DegenerateStart(usize),
    #[error("probe dimension {probe} does not match loss dimension {loss}")]
    DimensionMismatch { probe: usize, loss: usize },
    #[error("invalid probe settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A twice-differentiable scalar loss exposed through its gradient.
pub trait LossOracle: Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>, HessianError>;
}

/// `L(θ) = ½ θᵀAθ` for a symmetric `A` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    n: usize,
    a: Vec<f64>,
}

impl QuadraticLoss {
    pub fn new(n: usize, a: Vec<f64>) -> Self {
        assert_eq!(a.len(), n * n, "matrix must be n × n");
        Self { n, a }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut a = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            a[i * n + i] = *d;
        }
        Self { n, a }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.a
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl LossOracle for QuadraticLoss {
    fn dim(&self) -> usize {
        self.n
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>, HessianError> {
        Ok(self.matvec(theta))
    }
}

/// Mean cross-entropy of an MLP over a fixed dataset, in dataset order.
#[derive(Debug, Clone, Copy)]
pub struct MlpLoss<'a> {
    pub model: &'a Mlp,
    pub data: &'a Dataset,
}

impl LossOracle for MlpLoss<'_> {
    fn dim(&self) -> usize {
        self.model.param_count()
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>, HessianError> {
        Ok(self.model.loss_grad_accuracy(theta, &self.data.as_batch())?.grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub fd_base: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            fd_base: 1e-4,
            max_iters: 200,
            tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub lambda_max: f64,
    pub iterations: usize,
    /// `‖Hv − λv‖` at the returned vector.
    pub residual: f64,
    pub converged: bool,
    pub negative_curvature: bool,
}

pub struct HessianProbe<'a> {
    theta: Vec<f64>,
    oracle: &'a dyn LossOracle,
    fd_epsilon: f64,
    settings: ProbeSettings,
}

const MAX_RESTARTS: usize = 3;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> HessianProbe<'a> {
    pub fn new(
        theta: Vec<f64>,
        oracle: &'a dyn LossOracle,
        settings: ProbeSettings,
    ) -> Result<Self, HessianError> {
        if theta.len() != oracle.dim() {
            return Err(HessianError::DimensionMismatch {
                probe: theta.len(),
                loss: oracle.dim(),
            });
        }
        if !(settings.fd_base > 0.0 && settings.tol > 0.0 && settings.max_iters > 0) {
            return Err(HessianError::InvalidSettings(format!(
                "fd_base, tol and max_iters must be positive: {settings:?}"
            )));
        }
        let sup = theta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(Self {
            fd_epsilon: settings.fd_base * (1.0 + sup),
            theta,
            oracle,
            settings,
        })
    }

    pub fn fd_epsilon(&self) -> f64 {
        self.fd_epsilon
    }

    /// Central-difference Hessian-vector product along `v`.
    pub fn hvp(&self, v: &[f64]) -> Result<Vec<f64>, HessianError> {
        let h = self.fd_epsilon;
        let plus: Vec<f64> = self.theta.iter().zip(v).map(|(t, d)| t + h * d).collect();
        let minus: Vec<f64> = self.theta.iter().zip(v).map(|(t, d)| t - h * d).collect();
        let gp = self.oracle.gradient(&plus)?;
        let gm = self.oracle.gradient(&minus)?;
        let out: Vec<f64> = gp
            .iter()
            .zip(&gm)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        if out.iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(HessianError::NonFiniteGradient)
        }
    }

    fn random_unit(&self, seed: u64) -> Vec<f64> {
        let mut g = Gaussian::new(seed);
        let mut v: Vec<f64> = (0..self.theta.len()).map(|_| g.standard_normal()).collect();
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Power iteration.
    ///
    /// Converged when the Rayleigh quotient changed by at most
    /// `tol · max(1, |λ|)` since the previous iterate and the residual
    /// `‖Hv − λv‖` is at most `10 · tol · max(1, |λ|)`. An exact eigenvector
    /// (residual within `tol · max(1, |λ|)`) is accepted on the first
    /// iteration.
    pub fn top_eigenvalue(&self) -> Result<EigenEstimate, HessianError> {
        let tol = self.settings.tol;
        let mut restarts = 0;
        let mut v = self.random_unit(self.settings.seed);
        let mut prev_lambda: Option<f64> = None;
        let mut estimate = EigenEstimate {
            lambda_max: f64::NAN,
            iterations: 0,
            residual: f64::INFINITY,
            converged: false,
            negative_curvature: false,
        };
        let mut iter = 0;
        while iter < self.settings.max_iters {
            let hv = self.hvp(&v)?;
            let hv_norm = norm(&hv);
            if hv_norm < tol && prev_lambda.is_none() {
                restarts += 1;
                if restarts > MAX_RESTARTS {
                    return Err(HessianError::DegenerateStart(restarts));
                }
                v = self.random_unit(derive_seed(self.settings.seed, restarts as u64));
                continue;
            }
            iter += 1;
            let lambda = dot(&v, &hv);
            let residual = norm(
                &hv.iter()
                    .zip(&v)
                    .map(|(a, b)| a - lambda * b)
                    .collect::<Vec<_>>(),
            );
            let scale = lambda.abs().max(1.0);
            estimate = EigenEstimate {
                lambda_max: lambda,
                iterations: iter,
                residual,
                converged: false,
                negative_curvature: lambda < 0.0,
            };
            let settled = match prev_lambda {
                None => residual <= tol * scale,
                Some(p) => (lambda - p).abs() <= tol * scale && residual <= 10.0 * tol * scale,
            };
            if settled {
                estimate.converged = true;
                return Ok(estimate);
            }
            prev_lambda = Some(lambda);
            if hv_norm == 0.0 {
                break;
            }
            v = hv.iter().map(|x| x / hv_norm).collect();
        }
        Ok(estimate)
    }
}

/// `lambda_max,iterations,residual,converged` header plus one row.
pub fn write_estimate_csv<W: Write>(est: &EigenEstimate, mut out: W) -> std::io::Result<()> {
    writeln!(out, "lambda_max,iterations,residual,converged")?;
    writeln!(
        out,
        "{},{},{},{}",
        est.lambda_max, est.iterations, est.residual, est.converged
    )?;
    out.flush()
}
