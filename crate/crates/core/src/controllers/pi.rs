//! Classical PI baseline with the same saturation and anti-windup policy as
//! the i-PI loop.

use serde::{Deserialize, Serialize};

use super::ipi::SaturationLimits;
use crate::error::{Error, Result};

/// PI gains. Unlike [`IpiGains`](super::IpiGains) these are not sign-restricted so
/// that tuning grids can include (and reject) destabilizing candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

/// `u = kp * e + ki * (acc + e * tc)`, clamped. Returns the command and the
/// integral to carry forward, which is `acc` unchanged when the unclamped
/// command violates `limits`.
pub fn pi_step(
    integral_acc: f64,
    error: f64,
    kp: f64,
    ki: f64,
    tc: f64,
    limits: &SaturationLimits,
) -> Result<(f64, f64)> {
    if !error.is_finite() {
        return Err(Error::InvalidMeasurement(error));
    }
    if !(tc.is_finite() && tc > 0.0) {
        return Err(Error::param("tc", format!("must be positive, got {tc}")));
    }
    let integral = integral_acc + error * tc;
    let raw = kp * error + ki * integral;
    if raw.is_nan() {
        return Err(Error::InvalidMeasurement(raw));
    }
    if limits.contains(raw) {
        Ok((raw, integral))
    } else {
        Ok((limits.clamp(raw), integral_acc))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiController {
    pub gains: PiGains,
    pub limits: SaturationLimits,
    pub tc: f64,
    pub integral_acc: f64,
}

impl PiController {
    pub fn new(gains: PiGains, limits: SaturationLimits, tc: f64) -> Result<Self> {
        limits.validate()?;
        if !(tc.is_finite() && tc > 0.0) {
            return Err(Error::param("tc", format!("must be positive, got {tc}")));
        }
        Ok(Self {
            gains,
            limits,
            tc,
            integral_acc: 0.0,
        })
    }

    pub fn step(&mut self, error: f64) -> Result<f64> {
        let (u, acc) = pi_step(
            self.integral_acc,
            error,
            self.gains.kp,
            self.gains.ki,
            self.tc,
            &self.limits,
        )?;
        self.integral_acc = acc;
        Ok(u)
    }
}
