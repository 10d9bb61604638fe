//! Three-phase averaged bridge controlled directly in the abc frame.
//!
//! Each leg drives its phase through an inductor; the load neutral is tied to
//! the dc-link midpoint so the leg voltage is `u_i * E / 2`. State is
//! `[i_a, i_b, i_c, v_a, v_b, v_c]`. While the grid breaker is closed the
//! point-of-coupling voltages are imposed by the grid and the `v` states
//! follow it; once open, the local RC load sets them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_duty, Mutation, PowerBalance};
use crate::error::{Error, Result};

pub const PHASE_OFFSETS: [f64; 3] = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Perturbation {
    pub enabled: bool,
    /// amplitude relative to the grid amplitude
    pub rel: f64,
    /// Hz
    pub frequency: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            enabled: false,
            rel: 0.0,
            frequency: 0.0,
        }
    }
}

/// Ideal stiff three-phase voltage source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct GridModel {
    /// peak phase voltage (V)
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    pub perturbation: Perturbation,
    pub connected: bool,
}

impl GridModel {
    pub fn new(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            perturbation: Perturbation::default(),
            connected: true,
        }
    }

    pub fn voltage(&self, phase: usize, t: f64) -> f64 {
        let w = 2.0 * PI * self.frequency;
        let mut e = self.amplitude * (w * t + PHASE_OFFSETS[phase]).sin();
        if self.perturbation.enabled {
            let wp = 2.0 * PI * self.perturbation.frequency;
            e += self.perturbation.rel * self.amplitude * (wp * t).sin();
        }
        e
    }

    pub fn voltage_rate(&self, phase: usize, t: f64) -> f64 {
        let w = 2.0 * PI * self.frequency;
        let mut de = self.amplitude * w * (w * t + PHASE_OFFSETS[phase]).cos();
        if self.perturbation.enabled {
            let wp = 2.0 * PI * self.perturbation.frequency;
            de += self.perturbation.rel * self.amplitude * wp * (wp * t).cos();
        }
        de
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct RcLoad {
    pub r: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct TriPhaseInverter {
    /// dc bus voltage (V)
    pub e: f64,
    /// per-phase inductance (H)
    pub l: f64,
    /// per-phase local load (parallel RC, star connected)
    pub load: RcLoad,
    /// per-phase multipliers on the load resistance (unbalance)
    #[serde(default = "unit_scale")]
    pub load_scale: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridModel>,
}

fn unit_scale() -> [f64; 3] {
    [1.0; 3]
}

pub const STATE_LEN: usize = 6;
pub const INPUTS: &[&str] = &["u_a", "u_b", "u_c"];
pub const OUTPUTS: &[&str] = &[
    "I_L1a", "I_L2a", "I_L3a", "v_a", "v_b", "v_c", "i_out_a", "i_out_b", "i_out_c",
];

impl TriPhaseInverter {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e", self.e), ("l", self.l), ("load.r", self.load.r), ("load.c", self.load.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if self.load_scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::param("load_scale", "entries must be positive"));
        }
        if let Some(grid) = &self.grid {
            if !(grid.amplitude.is_finite() && grid.amplitude >= 0.0 && grid.frequency.is_finite()) {
                return Err(Error::param("grid", "amplitude and frequency must be finite"));
            }
        }
        Ok(())
    }

    pub fn grid_connected(&self) -> bool {
        self.grid.is_some_and(|g| g.connected)
    }

    fn phase_r(&self, phase: usize) -> f64 {
        self.load.r * self.load_scale[phase]
    }

    pub fn initial_state(&self, t0: f64) -> Vec<f64> {
        let mut x = vec![0.0; STATE_LEN];
        if let Some(grid) = self.grid.filter(|g| g.connected) {
            for p in 0..3 {
                x[3 + p] = grid.voltage(p, t0);
            }
        }
        x
    }

    pub fn derivatives(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]) -> Result<()> {
        for p in 0..3 {
            let leg = check_duty(u[p])? * self.e / 2.0;
            match self.grid.filter(|g| g.connected) {
                Some(grid) => {
                    dx[p] = (leg - grid.voltage(p, t)) / self.l;
                    dx[3 + p] = grid.voltage_rate(p, t);
                }
                None => {
                    let v = x[3 + p];
                    dx[p] = (leg - v) / self.l;
                    dx[3 + p] = (x[p] - v / self.phase_r(p)) / self.load.c;
                }
            }
        }
        Ok(())
    }

    pub fn outputs(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let grid = self.grid.filter(|g| g.connected);
        for p in 0..3 {
            out[p] = x[p];
            out[3 + p] = match grid {
                Some(g) => g.voltage(p, t),
                None => x[3 + p],
            };
            out[6 + p] = x[p];
        }
    }

    pub fn power_balance(&self, x: &[f64], u: &[f64], t: f64, dx: &[f64]) -> PowerBalance {
        let grid = self.grid.filter(|g| g.connected);
        let mut b = PowerBalance::default();
        for p in 0..3 {
            let i = x[p];
            let r = self.phase_r(p);
            let v = grid.map_or(x[3 + p], |g| g.voltage(p, t));
            b.stored_rate += self.l * i * dx[p] + self.load.c * v * dx[3 + p];
            b.supplied += u[p] * self.e / 2.0 * i;
            b.dissipated += v * v / r;
            if let Some(g) = grid {
                let i_grid = self.load.c * g.voltage_rate(p, t) + v / r - i;
                b.supplied += v * i_grid;
            }
        }
        b
    }

    pub fn apply(&mut self, _x: &mut [f64], mutation: &Mutation) -> Result<()> {
        let not_applicable = || Error::EventNotApplicable {
            event: mutation.label(),
            plant: "tri_phase",
        };
        match *mutation {
            Mutation::SetTriLoad { r, c } => {
                self.load = RcLoad { r, c };
            }
            Mutation::SetLoadR { r } => {
                self.load.r = r;
            }
            Mutation::OpenGridBreaker => match self.grid.as_mut() {
                // v states already equal the grid voltage at this instant
                Some(grid) if grid.connected => grid.connected = false,
                _ => return Err(not_applicable()),
            },
            Mutation::EnablePerturbation { rel, frequency } => match self.grid.as_mut() {
                Some(grid) => {
                    grid.perturbation = Perturbation {
                        enabled: true,
                        rel,
                        frequency,
                    }
                }
                None => return Err(not_applicable()),
            },
            Mutation::ConnectBranch2 => return Err(not_applicable()),
        }
        self.validate()
    }
}
