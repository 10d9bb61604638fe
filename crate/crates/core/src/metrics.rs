//! Active-power estimation and scalar performance metrics.

use serde::{Deserialize, Serialize};

use crate::controllers::MovingAverage;
use crate::error::{Error, Result};

/// Mean of `v * i` over one fundamental period.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEstimator {
    window: MovingAverage,
}

impl PowerEstimator {
    /// Window of one period of `fundamental_hz`, which must be an integer
    /// number of sampling periods `tc`.
    pub fn new(fundamental_hz: f64, tc: f64) -> Result<Self> {
        if !(fundamental_hz.is_finite() && fundamental_hz > 0.0 && tc > 0.0) {
            return Err(Error::param("fundamental_hz", "frequency and tc must be positive"));
        }
        let samples = 1.0 / (fundamental_hz * tc);
        let n = samples.round();
        if n < 1.0 || (samples - n).abs() > 1e-6 * n {
            return Err(Error::param(
                "fundamental_hz",
                format!("period 1/{fundamental_hz} s is not an integer multiple of tc = {tc} s"),
            ));
        }
        Ok(Self::with_window(n as usize))
    }

    pub fn with_window(window_len: usize) -> Self {
        Self {
            window: MovingAverage::new(window_len.max(1)).expect("window_len >= 1"),
        }
    }

    pub fn window_len(&self) -> usize {
        self.window.window_len()
    }

    /// True once a full period has been observed.
    pub fn is_warm(&self) -> bool {
        self.window.is_full()
    }

    pub fn push(&mut self, v: f64, i: f64) -> f64 {
        self.window.push(v * i)
    }
}

/// Push one `(v, i)` sample and return the running active-power estimate.
pub fn active_power(estimator: &mut PowerEstimator, v: f64, i: f64) -> f64 {
    estimator.push(v, i)
}

/// Integral of `t * |e(t)|` by the trapezoidal rule.
pub fn itae(time: &[f64], error: &[f64]) -> Result<f64> {
    if time.is_empty() || error.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if time.len() != error.len() {
        return Err(Error::param(
            "error",
            format!("length {} does not match time grid {}", error.len(), time.len()),
        ));
    }
    let integrand = |k: usize| time[k] * error[k].abs();
    Ok((1..time.len())
        .map(|k| 0.5 * (time[k] - time[k - 1]) * (integrand(k) + integrand(k - 1)))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlingMetrics {
    /// Absolute time after which `|e|` stays inside the band; `inf` if never.
    pub settling_time: f64,
    pub rms_error: f64,
    pub peak_error: f64,
}

/// Settling time, RMS and peak tracking error on `[from_t, end]`. The band is
/// `band * max|reference|` over that window.
pub fn settling_metrics(
    time: &[f64],
    output: &[f64],
    reference: &[f64],
    band: f64,
    from_t: f64,
) -> Result<SettlingMetrics> {
    if time.len() != output.len() || time.len() != reference.len() {
        return Err(Error::param("output", "channels must share the time grid"));
    }
    let start = window_start(time, from_t);
    if start >= time.len() {
        return Err(Error::EmptyTrace);
    }
    let window = start..time.len();
    let amplitude = reference[window.clone()].iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    if amplitude == 0.0 {
        return Err(Error::ZeroReferenceAmplitude);
    }
    let threshold = band * amplitude;

    let mut last_violation = None;
    let mut sum_sq = 0.0;
    let mut peak = 0.0_f64;
    for k in window.clone() {
        let e = (reference[k] - output[k]).abs();
        if e > threshold {
            last_violation = Some(k);
        }
        sum_sq += e * e;
        peak = peak.max(e);
    }
    let settling_time = match last_violation {
        None => from_t,
        Some(k) if k + 1 < time.len() => time[k + 1],
        Some(_) => f64::INFINITY,
    };
    Ok(SettlingMetrics {
        settling_time,
        rms_error: (sum_sq / window.len() as f64).sqrt(),
        peak_error: peak,
    })
}

/// RMS of `reference - output` on `[from_t, to_t]`.
pub fn rms_error(time: &[f64], output: &[f64], reference: &[f64], from_t: f64, to_t: f64) -> Result<f64> {
    let (sum, n) = time
        .iter()
        .zip(output.iter().zip(reference))
        .filter(|(t, _)| **t >= from_t - TIME_SLACK && **t <= to_t + TIME_SLACK)
        .fold((0.0, 0usize), |(s, n), (_, (y, r))| (s + (r - y) * (r - y), n + 1));
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok((sum / n as f64).sqrt())
}

/// Tolerance when comparing grid times against window bounds.
const TIME_SLACK: f64 = 1e-12;

/// First index with `time[k] >= from_t` (within rounding).
pub fn window_start(time: &[f64], from_t: f64) -> usize {
    time.partition_point(|t| *t < from_t - TIME_SLACK)
}
