//! Sampled-data intelligent PI controller built on the ultra-local model
//! `y^(n) = F + alpha * u`.
//!
//! At every sampling instant the lumped term `F` is re-estimated from the
//! finite-difference derivative of the last measured outputs and the previous
//! command, then cancelled:
//!
//! ```text
//! u_k = u_{k-1} - ([y^(n)]_{k-1} - [y*^(n)]_{k-1}) / alpha + C(y*_{k-1} - y_{k-1})
//! ```
//!
//! For `n = 2` the bracketed derivatives are `(y_{k-1} - 2 y_{k-2} + y_{k-3}) / Tc^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of past samples the law needs before it produces a new command.
pub const HISTORY_LEN: usize = 3;

/// Parameters of the ultra-local model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltraLocalParams {
    alpha: f64,
    order: u8,
    tc: f64,
}

impl UltraLocalParams {
    pub fn new(alpha: f64, order: u8, tc: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(Error::param("alpha", format!("must be finite and non-zero, got {alpha}")));
        }
        if order != 1 && order != 2 {
            return Err(Error::param("order", format!("must be 1 or 2, got {order}")));
        }
        if !(tc.is_finite() && tc > 0.0) {
            return Err(Error::param("tc", format!("must be positive, got {tc}")));
        }
        Ok(Self { alpha, order, tc })
    }

    /// Second-order model, the default for switched converters.
    pub fn second_order(alpha: f64, tc: f64) -> Result<Self> {
        Self::new(alpha, 2, tc)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn tc(&self) -> f64 {
        self.tc
    }
}

/// Gains of the corrector `C(e) = kp * e + ki * integral(e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct IpiGains {
    pub kp: f64,
    pub ki: f64,
}

impl IpiGains {
    pub fn new(kp: f64, ki: f64) -> Result<Self> {
        let gains = Self { kp, ki };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp.is_finite() && self.kp >= 0.0) {
            return Err(Error::param("kp", format!("must be finite and >= 0, got {}", self.kp)));
        }
        if !(self.ki.is_finite() && self.ki >= 0.0) {
            return Err(Error::param("ki", format!("must be finite and >= 0, got {}", self.ki)));
        }
        Ok(())
    }
}

/// Actuator bounds applied to every command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct SaturationLimits {
    pub u_min: f64,
    pub u_max: f64,
}

impl SaturationLimits {
    pub fn new(u_min: f64, u_max: f64) -> Result<Self> {
        let limits = Self { u_min, u_max };
        limits.validate()?;
        Ok(limits)
    }

    /// Full-bridge duty-cycle range `[-1, 1]`.
    pub fn duty_cycle() -> Self {
        Self { u_min: -1.0, u_max: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u_min.is_nan() || self.u_max.is_nan() || self.u_min >= self.u_max {
            return Err(Error::param(
                "limits",
                format!("require u_min < u_max, got [{}, {}]", self.u_min, self.u_max),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.u_min && u <= self.u_max
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.u_min, self.u_max)
    }
}

impl Default for SaturationLimits {
    fn default() -> Self {
        Self::duty_cycle()
    }
}

/// Fixed-capacity newest-first history of the last three samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct History {
    samples: [f64; HISTORY_LEN],
    len: usize,
}

impl History {
    pub fn from_samples(newest_first: [f64; HISTORY_LEN]) -> Self {
        Self {
            samples: newest_first,
            len: HISTORY_LEN,
        }
    }

    pub fn push(&mut self, sample: f64) {
        self.samples.copy_within(0..HISTORY_LEN - 1, 1);
        self.samples[0] = sample;
        self.len = (self.len + 1).min(HISTORY_LEN);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == HISTORY_LEN
    }

    /// `(y_{k-1}, y_{k-2}, y_{k-3})`; only the first `len()` entries are meaningful.
    pub fn samples(&self) -> &[f64; HISTORY_LEN] {
        &self.samples
    }

    /// Backward-difference estimate of the `order`-th derivative.
    fn derivative(&self, order: u8, tc: f64) -> f64 {
        let s = &self.samples;
        match order {
            1 => (s[0] - s[1]) / tc,
            _ => second_difference(s[0], s[1], s[2], tc),
        }
    }
}

/// Mutable state of one i-PI loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IpiState {
    pub u_prev: f64,
    pub y_hist: History,
    pub yref_hist: History,
    pub integral_acc: f64,
    pub saturated: bool,
}

impl IpiState {
    pub fn new() -> Self {
        Self::default()
    }

    /// A state whose histories are already populated.
    pub fn warm(u_prev: f64, y_hist: [f64; 3], yref_hist: [f64; 3], integral_acc: f64) -> Self {
        Self {
            u_prev,
            y_hist: History::from_samples(y_hist),
            yref_hist: History::from_samples(yref_hist),
            integral_acc,
            saturated: false,
        }
    }

    pub fn is_warm(&self) -> bool {
        self.y_hist.is_full() && self.yref_hist.is_full()
    }
}

/// Three-point backward second difference `(y1 - 2 y2 + y3) / tc^2`, where
/// `y1` is the newest sample.
pub fn second_difference(y1: f64, y2: f64, y3: f64, tc: f64) -> f64 {
    (y1 - 2.0 * y2 + y3) / (tc * tc)
}

/// Online estimate `[F] = [y^(n)] - alpha * u_prev`.
pub fn estimate_f(state: &IpiState, params: &UltraLocalParams) -> Result<f64> {
    let need = params.order as usize + 1;
    if state.y_hist.len() < need {
        return Err(Error::NotWarmedUp {
            have: state.y_hist.len(),
            need,
        });
    }
    Ok(state.y_hist.derivative(params.order, params.tc) - params.alpha * state.u_prev)
}

/// One sampling instant of the i-PI law.
///
/// `y_new` and `yref_new` are the samples taken at this instant; they enter the
/// histories as `y_{k-1}` / `y*_{k-1}` for the next call. Until both
/// histories hold three samples the previous command is returned unchanged.
/// The integral is frozen whenever the unclamped command falls outside
/// `limits`. On error the state is not modified.
pub fn ipi_step(
    state: &mut IpiState,
    y_new: f64,
    yref_new: f64,
    params: &UltraLocalParams,
    gains: &IpiGains,
    limits: &SaturationLimits,
) -> Result<f64> {
    if !y_new.is_finite() {
        return Err(Error::InvalidMeasurement(y_new));
    }
    if !yref_new.is_finite() {
        return Err(Error::InvalidMeasurement(yref_new));
    }

    if state.is_warm() {
        let order = params.order;
        let tc = params.tc;
        let y_deriv = state.y_hist.derivative(order, tc);
        let yref_deriv = state.yref_hist.derivative(order, tc);
        let error = state.yref_hist.samples()[0] - state.y_hist.samples()[0];
        let integral = state.integral_acc + error * tc;

        let raw = state.u_prev - (y_deriv - yref_deriv) / params.alpha
            + gains.kp * error
            + gains.ki * integral;
        if raw.is_nan() {
            return Err(Error::InvalidMeasurement(raw));
        }

        let within = limits.contains(raw);
        if within {
            state.integral_acc = integral;
        }
        state.saturated = !within;
        state.u_prev = limits.clamp(raw);
    }

    state.y_hist.push(y_new);
    state.yref_hist.push(yref_new);
    Ok(state.u_prev)
}

/// Convenience wrapper bundling parameters, gains, limits and state.
#[derive(Debug, Clone, PartialEq)]
pub struct IpiController {
    pub params: UltraLocalParams,
    pub gains: IpiGains,
    pub limits: SaturationLimits,
    pub state: IpiState,
}

impl IpiController {
    pub fn new(params: UltraLocalParams, gains: IpiGains, limits: SaturationLimits) -> Result<Self> {
        gains.validate()?;
        limits.validate()?;
        Ok(Self {
            params,
            gains,
            limits,
            state: IpiState::new(),
        })
    }

    pub fn step(&mut self, y: f64, yref: f64) -> Result<f64> {
        ipi_step(&mut self.state, y, yref, &self.params, &self.gains, &self.limits)
    }

    pub fn estimate_f(&self) -> Result<f64> {
        estimate_f(&self.state, &self.params)
    }

    pub fn reset(&mut self) {
        self.state = IpiState::new();
    }
}
