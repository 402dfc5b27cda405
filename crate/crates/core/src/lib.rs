//! Volatility-driven learning-rate scheduling and the tooling to study it.
//!
//! - [`scheduler`]: VolSched plus cosine, exponential and reduce-on-plateau
//!   baselines behind one stepping contract.
//! - [`trace_sim`]: GBM and regime-switching accuracy traces.
//! - [`trainer`]: datasets, an MLP with backprop, momentum SGD, run loop.
//! - [`hessian`]: top Hessian eigenvalue via power iteration.
//! - [`harness`]: config parsing, multi-seed experiments, sweeps, reports.

pub mod harness;
pub mod hessian;
pub mod rng;
pub mod scheduler;
pub mod stats;
pub mod trace_sim;
pub mod trainer;
