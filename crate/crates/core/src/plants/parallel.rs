//! Two averaged full bridges feeding a shared output capacitor and resistor.
//!
//! State `[i_L1, i_L2, v_out]`.

use serde::{Deserialize, Serialize};

use super::{check_duty, Mutation, PowerBalance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ParallelInverterPair {
    pub e: f64,
    pub l1: f64,
    pub l2: f64,
    pub c_bus: f64,
    /// load resistance (ohm)
    pub r: f64,
}

pub const STATE_LEN: usize = 3;
pub const INPUTS: &[&str] = &["u1", "u2"];
pub const OUTPUTS: &[&str] = &["v_out", "i_L1", "i_L2", "i_out"];

impl ParallelInverterPair {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e", self.e),
            ("l1", self.l1),
            ("l2", self.l2),
            ("c_bus", self.c_bus),
            ("r", self.r),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn derivatives(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) -> Result<()> {
        let (u1, u2) = (check_duty(u[0])?, check_duty(u[1])?);
        let v = x[2];
        dx[0] = (u1 * self.e - v) / self.l1;
        dx[1] = (u2 * self.e - v) / self.l2;
        dx[2] = (x[0] + x[1] - v / self.r) / self.c_bus;
        Ok(())
    }

    pub fn outputs(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[2];
        out[1] = x[0];
        out[2] = x[1];
        out[3] = x[2] / self.r;
    }

    pub fn power_balance(&self, x: &[f64], u: &[f64], dx: &[f64]) -> PowerBalance {
        PowerBalance {
            stored_rate: self.l1 * x[0] * dx[0] + self.l2 * x[1] * dx[1] + self.c_bus * x[2] * dx[2],
            supplied: self.e * (u[0] * x[0] + u[1] * x[1]),
            dissipated: x[2] * x[2] / self.r,
        }
    }

    pub fn apply(&mut self, _x: &mut [f64], mutation: &Mutation) -> Result<()> {
        match *mutation {
            Mutation::SetLoadR { r } => self.r = r,
            _ => {
                return Err(Error::EventNotApplicable {
                    event: mutation.label(),
                    plant: "parallel_pair",
                })
            }
        }
        self.validate()
    }
}
