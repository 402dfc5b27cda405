use std::collections::VecDeque;

use super::{check_accuracy, SchedulerError};
use crate::stats::RunningStats;

/// Running log-return statistics over a sequence of batch accuracies.
///
/// Accuracies are clipped to `max(acc, epsilon)` before the log-return
/// `ln(l'_t / l'_{t-1})` is formed. The volatility over all returns is kept
/// in a Welford accumulator; the last `window` returns are kept verbatim.
#[derive(Debug, Clone)]
pub struct AccuracyStream {
    window: usize,
    epsilon: f64,
    count: usize,
    running_all: RunningStats,
    recent_returns: VecDeque<f64>,
    last_clipped: Option<f64>,
}

impl AccuracyStream {
    pub fn new(window: usize, epsilon: f64) -> Self {
        Self {
            window,
            epsilon,
            count: 0,
            running_all: RunningStats::new(),
            recent_returns: VecDeque::with_capacity(window),
            last_clipped: None,
        }
    }

    pub fn push(&mut self, accuracy: f64) -> Result<(), SchedulerError> {
        check_accuracy(accuracy)?;
        let clipped = accuracy.max(self.epsilon);
        if let Some(prev) = self.last_clipped {
            let r = (clipped / prev).ln();
            self.running_all.push(r);
            if self.recent_returns.len() == self.window {
                self.recent_returns.pop_front();
            }
            self.recent_returns.push_back(r);
        }
        self.last_clipped = Some(clipped);
        self.count += 1;
        Ok(())
    }

    /// Number of accuracies observed.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn last_clipped_accuracy(&self) -> Option<f64> {
        self.last_clipped
    }

    pub fn recent_returns(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.recent_returns.iter().copied()
    }

    /// Sample stdev of every log-return seen so far.
    pub fn sigma_all(&self) -> f64 {
        self.running_all.stdev()
    }

    /// Sample stdev of the last `window` log-returns.
    pub fn sigma_recent(&self) -> f64 {
        let n = self.recent_returns.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.recent_returns.iter().sum::<f64>() / n as f64;
        let ss: f64 = self.recent_returns.iter().map(|r| (r - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    pub fn has_full_window(&self) -> bool {
        self.count > self.window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_accuracy_is_clipped() {
        let mut s = AccuracyStream::new(4, 1e-8);
        s.push(0.0).unwrap();
        assert_eq!(s.last_clipped_accuracy(), Some(1e-8));
    }

    #[test]
    fn equal_accuracies_give_zero_return() {
        let mut s = AccuracyStream::new(4, 1e-8);
        s.push(0.5).unwrap();
        s.push(0.5).unwrap();
        assert_eq!(s.recent_returns().collect::<Vec<_>>(), vec![0.0]);
    }

    #[test]
    fn doubling_gives_ln2() {
        let mut s = AccuracyStream::new(4, 1e-8);
        s.push(0.25).unwrap();
        s.push(0.5).unwrap();
        let r: Vec<f64> = s.recent_returns().collect();
        assert!((r[0] - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn window_len_tracks_count() {
        let mut s = AccuracyStream::new(3, 1e-8);
        for i in 0..10 {
            s.push(0.1 + 0.05 * i as f64).unwrap();
            assert_eq!(s.recent_returns().len(), s.count().saturating_sub(1).min(3));
        }
    }

    #[test]
    fn rejects_percentages() {
        let mut s = AccuracyStream::new(3, 1e-8);
        assert!(s.push(63.2).is_err());
        assert!(s.push(-0.1).is_err());
        assert_eq!(s.count(), 0);
    }
}
