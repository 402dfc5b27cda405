//! Synthetic accuracy traces from geometric Brownian motion.
//!
//! Exact log-space discretisation:
//! `S_{t+1} = S_t · exp((μ − σ²/2) dt + σ √dt · Z_t)` with `Z_t` standard
//! normal from [`crate::rng::Gaussian`].

use std::io::Write;

use thiserror::Error;

use crate::rng::Gaussian;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid trace parameters: {0}")]
    InvalidParams(String),
    #[error("regime trace needs at least one segment")]
    NoSegments,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmParams {
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
}

impl GbmParams {
    fn validate(&self) -> Result<(), TraceError> {
        validate_common(self.s0, self.dt)?;
        validate_sigma(self.sigma)
    }
}

fn validate_common(s0: f64, dt: f64) -> Result<(), TraceError> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(TraceError::InvalidParams(format!("s0 must be positive, got {s0}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TraceError::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

fn validate_sigma(sigma: f64) -> Result<(), TraceError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(TraceError::InvalidParams(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    Ok(())
}

fn advance(s: f64, mu: f64, sigma: f64, dt: f64, gauss: &mut Gaussian) -> f64 {
    let z = gauss.standard_normal();
    s * ((mu - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * z).exp()
}

/// `steps + 1` values starting with `s0`.
pub fn gbm_trace(params: &GbmParams) -> Result<Vec<f64>, TraceError> {
    params.validate()?;
    let mut gauss = Gaussian::new(params.seed);
    let mut out = Vec::with_capacity(params.steps + 1);
    let mut s = params.s0;
    out.push(s);
    for _ in 0..params.steps {
        s = advance(s, params.mu, params.sigma, params.dt, &mut gauss);
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: usize,
    pub mu: f64,
    pub sigma: f64,
}

/// Piecewise GBM: each segment continues from the last unclipped value with
/// its own drift and volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeTrace {
    pub segments: Vec<Segment>,
    pub s0: f64,
    pub dt: f64,
    pub seed: u64,
}

impl RegimeTrace {
    pub fn total_steps(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// `total_steps + 1` values clipped from above at 1. The lower side is left
/// to the scheduler's epsilon clip.
pub fn regime_trace(spec: &RegimeTrace) -> Result<Vec<f64>, TraceError> {
    if spec.segments.is_empty() {
        return Err(TraceError::NoSegments);
    }
    validate_common(spec.s0, spec.dt)?;
    for seg in &spec.segments {
        validate_sigma(seg.sigma)?;
    }
    let mut gauss = Gaussian::new(spec.seed);
    let mut out = Vec::with_capacity(spec.total_steps() + 1);
    let mut s = spec.s0;
    out.push(s.min(1.0));
    for seg in &spec.segments {
        for _ in 0..seg.length {
            s = advance(s, seg.mu, seg.sigma, spec.dt, &mut gauss);
            out.push(s.min(1.0));
        }
    }
    Ok(out)
}

/// Single-column CSV with header `accuracy`.
pub fn write_trace_csv<W: Write>(values: &[f64], out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["accuracy"]).map_err(csv_io)?;
    for v in values {
        w.write_record([v.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> TraceError {
    TraceError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(sigma: f64, steps: usize, seed: u64) -> GbmParams {
        GbmParams {
            s0: 0.5,
            mu: 0.0,
            sigma,
            dt: 1.0,
            steps,
            seed,
        }
    }

    #[test]
    fn deterministic_limit() {
        let p = GbmParams {
            s0: 1.0,
            mu: 0.1,
            sigma: 0.0,
            dt: 1.0,
            steps: 3,
            seed: 0,
        };
        let tr = gbm_trace(&p).unwrap();
        let expect = [1.0, 0.1f64.exp(), 0.2f64.exp(), 0.3f64.exp()];
        for (a, b) in tr.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        assert_eq!(
            gbm_trace(&params(0.3, 500, 9)).unwrap(),
            gbm_trace(&params(0.3, 500, 9)).unwrap()
        );
        assert_ne!(
            gbm_trace(&params(0.3, 500, 9)).unwrap(),
            gbm_trace(&params(0.3, 500, 10)).unwrap()
        );
    }

    #[test]
    fn log_return_volatility_and_skew() {
        // zero log-drift keeps 10^5 steps inside f64 range
        let p = GbmParams {
            mu: 0.02,
            ..params(0.2, 100_000, 3)
        };
        let tr = gbm_trace(&p).unwrap();
        assert!(tr.iter().all(|&v| v > 0.0));
        let r: Vec<f64> = tr.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let sd = crate::stats::sample_stdev(&r).unwrap();
        assert!((sd - 0.2).abs() <= 0.02 * 0.2, "sd {sd}");
        let m = crate::stats::mean(&r);
        let skew = r.iter().map(|x| ((x - m) / sd).powi(3)).sum::<f64>() / r.len() as f64;
        assert!(skew.abs() < 0.05, "skew {skew}");
    }

    #[test]
    fn single_segment_is_clipped_gbm() {
        let p = params(0.05, 300, 4);
        let spec = RegimeTrace {
            segments: vec![Segment {
                length: 300,
                mu: 0.0,
                sigma: 0.05,
            }],
            s0: p.s0,
            dt: p.dt,
            seed: p.seed,
        };
        let plain: Vec<f64> = gbm_trace(&p).unwrap().into_iter().map(|v| v.min(1.0)).collect();
        assert_eq!(regime_trace(&spec).unwrap(), plain);
    }

    #[test]
    fn flat_segment_is_constant() {
        let spec = RegimeTrace {
            segments: vec![
                Segment {
                    length: 50,
                    mu: 0.0,
                    sigma: 0.1,
                },
                Segment {
                    length: 40,
                    mu: 0.0,
                    sigma: 0.0,
                },
            ],
            s0: 0.4,
            dt: 1.0,
            seed: 1,
        };
        let tr = regime_trace(&spec).unwrap();
        assert_eq!(tr.len(), 91);
        assert!(tr[50..].iter().all(|&v| v == tr[50]));
        assert!(tr.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn empty_segments_rejected() {
        let spec = RegimeTrace {
            segments: vec![],
            s0: 0.4,
            dt: 1.0,
            seed: 1,
        };
        assert!(matches!(regime_trace(&spec), Err(TraceError::NoSegments)));
        assert!(gbm_trace(&GbmParams {
            s0: 0.0,
            ..params(0.1, 3, 0)
        })
        .is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_trace_csv(&[0.5, 0.25], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "accuracy\n0.5\n0.25\n");
    }
}
