//! Averaged full-bridge inverter with an LC output filter.
//!
//! State `[i_L, v_C, i_2]`, where `i_2` is the current of an inductive load
//! branch (identically zero for loads without one).

use serde::{Deserialize, Serialize};

use super::{check_duty, Mutation, PowerBalance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadModel {
    Resistive { r: f64 },
    ParallelRc { r: f64, c: f64 },
    SeriesRl { r: f64, l: f64 },
    /// Resistor `r` always connected, series `r2`/`l2` branch switchable.
    TwoBranch {
        r: f64,
        r2: f64,
        l2: f64,
        branch2_connected: bool,
    },
}

impl LoadModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            LoadModel::Resistive { r } => positive("load.r", r),
            LoadModel::ParallelRc { r, c } => {
                positive("load.r", r)?;
                positive("load.c", c)
            }
            LoadModel::SeriesRl { r, l } => {
                positive("load.r", r)?;
                positive("load.l", l)
            }
            LoadModel::TwoBranch { r, r2, l2, .. } => {
                positive("load.r", r)?;
                positive("load.r2", r2)?;
                positive("load.l2", l2)
            }
        }
    }

    /// Series branch `(R, L)` when it is part of the circuit.
    fn active_branch(&self) -> Option<(f64, f64)> {
        match *self {
            LoadModel::SeriesRl { r, l } => Some((r, l)),
            LoadModel::TwoBranch {
                r2,
                l2,
                branch2_connected: true,
                ..
            } => Some((r2, l2)),
            _ => None,
        }
    }

    fn shunt_resistance(&self) -> Option<f64> {
        match *self {
            LoadModel::Resistive { r } | LoadModel::ParallelRc { r, .. } | LoadModel::TwoBranch { r, .. } => Some(r),
            LoadModel::SeriesRl { .. } => None,
        }
    }

    fn shunt_capacitance(&self) -> f64 {
        match *self {
            LoadModel::ParallelRc { c, .. } => c,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct SinglePhaseInverter {
    /// dc bus voltage (V)
    pub e: f64,
    /// filter inductance (H)
    pub l: f64,
    /// filter capacitance (F)
    pub c: f64,
    pub load: LoadModel,
}

pub const STATE_LEN: usize = 3;
pub const INPUTS: &[&str] = &["u"];
pub const OUTPUTS: &[&str] = &["v_out", "i_L", "i_out"];

impl SinglePhaseInverter {
    pub fn new(e: f64, l: f64, c: f64, load: LoadModel) -> Result<Self> {
        let plant = Self { e, l, c, load };
        plant.validate()?;
        Ok(plant)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e", self.e), ("l", self.l), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        self.load.validate()
    }

    fn capacitor_current(&self, x: &[f64]) -> f64 {
        let (i_l, v) = (x[0], x[1]);
        let mut i_load = match self.load.shunt_resistance() {
            Some(r) => v / r,
            None => 0.0,
        };
        if self.load.active_branch().is_some() {
            i_load += x[2];
        }
        i_l - i_load
    }

    pub fn derivatives(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) -> Result<()> {
        let duty = check_duty(u[0])?;
        let v = x[1];
        dx[0] = (duty * self.e - v) / self.l;
        dx[1] = self.capacitor_current(x) / (self.c + self.load.shunt_capacitance());
        dx[2] = match self.load.active_branch() {
            Some((r2, l2)) => (v - r2 * x[2]) / l2,
            None => 0.0,
        };
        Ok(())
    }

    pub fn outputs(&self, x: &[f64], out: &mut [f64]) {
        let (i_l, v) = (x[0], x[1]);
        let c_load = self.load.shunt_capacitance();
        let mut i_out = match self.load.shunt_resistance() {
            Some(r) => v / r,
            None => 0.0,
        };
        if self.load.active_branch().is_some() {
            i_out += x[2];
        }
        if c_load > 0.0 {
            i_out += c_load * self.capacitor_current(x) / (self.c + c_load);
        }
        out[0] = v;
        out[1] = i_l;
        out[2] = i_out;
    }

    pub fn power_balance(&self, x: &[f64], u: &[f64], dx: &[f64]) -> PowerBalance {
        let (i_l, v) = (x[0], x[1]);
        let c_total = self.c + self.load.shunt_capacitance();
        let mut stored = self.l * i_l * dx[0] + c_total * v * dx[1];
        let mut dissipated = self.load.shunt_resistance().map_or(0.0, |r| v * v / r);
        if let Some((r2, l2)) = self.load.active_branch() {
            stored += l2 * x[2] * dx[2];
            dissipated += r2 * x[2] * x[2];
        }
        PowerBalance {
            stored_rate: stored,
            supplied: u[0] * self.e * i_l,
            dissipated,
        }
    }

    pub fn apply(&mut self, x: &mut [f64], mutation: &Mutation) -> Result<()> {
        match (mutation, &mut self.load) {
            (Mutation::SetLoadR { r }, LoadModel::Resistive { r: old })
            | (Mutation::SetLoadR { r }, LoadModel::ParallelRc { r: old, .. })
            | (Mutation::SetLoadR { r }, LoadModel::SeriesRl { r: old, .. })
            | (Mutation::SetLoadR { r }, LoadModel::TwoBranch { r: old, .. }) => {
                *old = *r;
            }
            (Mutation::ConnectBranch2, LoadModel::TwoBranch { branch2_connected, .. }) => {
                if !*branch2_connected {
                    *branch2_connected = true;
                    x[2] = 0.0;
                }
            }
            _ => {
                return Err(Error::EventNotApplicable {
                    event: mutation.label(),
                    plant: "single_phase",
                })
            }
        }
        self.load.validate()
    }
}
