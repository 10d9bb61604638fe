use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Sliding-window arithmetic mean.
///
/// The running sum is kept relative to the first sample ever pushed so that a
/// constant stream averages to exactly that constant; it is rebuilt from the
/// buffer once per window to stop drift.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverage {
    window_len: usize,
    buffer: VecDeque<f64>,
    pivot: Option<f64>,
    running_sum: f64,
    since_rebuild: usize,
}

impl MovingAverage {
    pub fn new(window_len: usize) -> Result<Self> {
        if window_len == 0 {
            return Err(Error::param("window_len", "must be at least 1"));
        }
        Ok(Self {
            window_len,
            buffer: VecDeque::with_capacity(window_len),
            pivot: None,
            running_sum: 0.0,
            since_rebuild: 0,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Number of samples currently buffered (at most `window_len`).
    pub fn count(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.window_len
    }

    /// Push a sample and return the mean of the most recent
    /// `min(count, window_len)` samples.
    pub fn push(&mut self, sample: f64) -> f64 {
        let pivot = *self.pivot.get_or_insert(sample);
        if self.buffer.len() == self.window_len {
            if let Some(old) = self.buffer.pop_front() {
                self.running_sum -= old - pivot;
            }
        }
        self.buffer.push_back(sample);
        self.running_sum += sample - pivot;

        self.since_rebuild += 1;
        if self.since_rebuild >= self.window_len {
            self.running_sum = self.buffer.iter().map(|x| x - pivot).sum();
            self.since_rebuild = 0;
        }
        self.mean()
    }

    /// Current mean, or 0 before the first sample.
    pub fn mean(&self) -> f64 {
        match self.pivot {
            Some(pivot) if !self.buffer.is_empty() => {
                pivot + self.running_sum / self.buffer.len() as f64
            }
            _ => 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.pivot = None;
        self.running_sum = 0.0;
        self.since_rebuild = 0;
    }
}

/// Free-function form of [`MovingAverage::push`].
pub fn ma_push(filter: &mut MovingAverage, sample: f64) -> f64 {
    filter.push(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn two_sample_mean() {
        let mut ma = MovingAverage::new(2).unwrap();
        assert_eq!(ma.push(0.0), 0.0);
        assert_eq!(ma.push(1.0), 0.5);
        assert_eq!(ma.push(3.0), 2.0);
    }

    #[test]
    fn partial_window_is_running_mean() {
        let mut ma = MovingAverage::new(10).unwrap();
        ma.push(1.0);
        ma.push(2.0);
        assert_eq!(ma.push(6.0), 3.0);
    }

    #[test]
    fn full_period_sinusoid_averages_out() {
        // Four samples per period, phase offset to avoid hitting zeros.
        let mut ma = MovingAverage::new(4).unwrap();
        let mut out = 0.0;
        for k in 0..4 {
            out = ma.push((2.0 * PI * k as f64 / 4.0 + 0.3).sin());
        }
        assert!(out.abs() < 1e-15, "{out}");
    }

    #[test]
    fn zero_window_rejected() {
        assert!(MovingAverage::new(0).is_err());
    }

    proptest! {
        #[test]
        fn constant_stream_is_exact(c in proptest::num::f64::NORMAL, n in 1usize..50, len in 1usize..200) {
            let mut ma = MovingAverage::new(n).unwrap();
            for _ in 0..len {
                prop_assert_eq!(ma.push(c), c);
            }
        }

        #[test]
        fn matches_direct_mean(xs in proptest::collection::vec(-1e3..1e3f64, 1..300), n in 1usize..40) {
            let mut ma = MovingAverage::new(n).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                let got = ma.push(x);
                let lo = (i + 1).saturating_sub(n);
                let window = &xs[lo..=i];
                let expected = window.iter().sum::<f64>() / window.len() as f64;
                prop_assert!((got - expected).abs() <= 1e-9, "{} vs {}", got, expected);
            }
        }
    }
}
