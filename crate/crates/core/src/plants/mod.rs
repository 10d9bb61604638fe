//! Averaged-model plants and the timed mutations applied to them.

pub mod parallel;
pub mod single_phase;
pub mod triphase;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parallel::ParallelInverterPair;
pub use single_phase::{LoadModel, SinglePhaseInverter};
pub use triphase::{GridModel, Perturbation, RcLoad, TriPhaseInverter};

/// Instantaneous power flows of a plant. For a lossless averaged bridge
/// `stored_rate == supplied - dissipated`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerBalance {
    /// d/dt of the energy held in inductors and capacitors (W)
    pub stored_rate: f64,
    /// power delivered by bridges and external sources (W)
    pub supplied: f64,
    /// power dissipated in resistors (W)
    pub dissipated: f64,
}

impl PowerBalance {
    pub fn residual(&self) -> f64 {
        self.stored_rate - (self.supplied - self.dissipated)
    }

    /// Residual relative to the magnitude of the flows involved.
    pub fn relative_residual(&self) -> f64 {
        let scale = self.stored_rate.abs() + self.supplied.abs() + self.dissipated.abs();
        if scale == 0.0 {
            0.0
        } else {
            self.residual().abs() / scale
        }
    }
}

pub(crate) fn check_duty(u: f64) -> Result<f64> {
    if (-1.0..=1.0).contains(&u) {
        Ok(u)
    } else {
        Err(Error::DutyOutOfRange(u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mutation {
    SetLoadR { r: f64 },
    ConnectBranch2,
    SetTriLoad { r: f64, c: f64 },
    OpenGridBreaker,
    EnablePerturbation { rel: f64, frequency: f64 },
}

impl Mutation {
    pub fn label(&self) -> String {
        match self {
            Mutation::SetLoadR { r } => format!("set_load_r({r})"),
            Mutation::ConnectBranch2 => "connect_branch2".into(),
            Mutation::SetTriLoad { r, c } => format!("set_tri_load({r}, {c})"),
            Mutation::OpenGridBreaker => "open_grid_breaker".into(),
            Mutation::EnablePerturbation { rel, frequency } => {
                format!("enable_perturbation({rel}, {frequency})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Event {
    /// seconds
    pub time: f64,
    pub mutation: Mutation,
}

impl Event {
    pub fn new(time: f64, mutation: Mutation) -> Self {
        Self { time, mutation }
    }
}

/// Generic first-order lag `tau * dy/dt = -y + gain * u`, used for tuning
/// studies. Its input is not restricted to a duty-cycle range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct FirstOrderLag {
    pub tau: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plant {
    SinglePhase(SinglePhaseInverter),
    TriPhase(TriPhaseInverter),
    ParallelPair(ParallelInverterPair),
    FirstOrder(FirstOrderLag),
}

impl Plant {
    pub fn kind(&self) -> &'static str {
        match self {
            Plant::SinglePhase(_) => "single_phase",
            Plant::TriPhase(_) => "tri_phase",
            Plant::ParallelPair(_) => "parallel_pair",
            Plant::FirstOrder(_) => "first_order",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Plant::SinglePhase(p) => p.validate(),
            Plant::TriPhase(p) => p.validate(),
            Plant::ParallelPair(p) => p.validate(),
            Plant::FirstOrder(p) => {
                if p.tau.is_finite() && p.tau > 0.0 && p.gain.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("tau", "must be positive with a finite gain"))
                }
            }
        }
    }

    pub fn state_len(&self) -> usize {
        match self {
            Plant::SinglePhase(_) => single_phase::STATE_LEN,
            Plant::TriPhase(_) => triphase::STATE_LEN,
            Plant::ParallelPair(_) => parallel::STATE_LEN,
            Plant::FirstOrder(_) => 1,
        }
    }

    pub fn input_names(&self) -> &'static [&'static str] {
        match self {
            Plant::SinglePhase(_) => single_phase::INPUTS,
            Plant::TriPhase(_) => triphase::INPUTS,
            Plant::ParallelPair(_) => parallel::INPUTS,
            Plant::FirstOrder(_) => &["u"],
        }
    }

    pub fn output_names(&self) -> &'static [&'static str] {
        match self {
            Plant::SinglePhase(_) => single_phase::OUTPUTS,
            Plant::TriPhase(_) => triphase::OUTPUTS,
            Plant::ParallelPair(_) => parallel::OUTPUTS,
            Plant::FirstOrder(_) => &["y"],
        }
    }

    pub fn input_index(&self, slot: &str) -> Result<usize> {
        self.input_names()
            .iter()
            .position(|n| *n == slot)
            .ok_or_else(|| Error::NoSuchSlot(slot.to_string()))
    }

    pub fn output_index(&self, signal: &str) -> Result<usize> {
        self.output_names()
            .iter()
            .position(|n| *n == signal)
            .ok_or_else(|| Error::NoSuchSignal(signal.to_string()))
    }

    pub fn initial_state(&self, t0: f64) -> Vec<f64> {
        match self {
            Plant::TriPhase(p) => p.initial_state(t0),
            _ => vec![0.0; self.state_len()],
        }
    }

    pub fn derivatives(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]) -> Result<()> {
        match self {
            Plant::SinglePhase(p) => p.derivatives(x, u, t, dx),
            Plant::TriPhase(p) => p.derivatives(x, u, t, dx),
            Plant::ParallelPair(p) => p.derivatives(x, u, t, dx),
            Plant::FirstOrder(p) => {
                dx[0] = (p.gain * u[0] - x[0]) / p.tau;
                Ok(())
            }
        }
    }

    /// Fills `out` (length `output_names().len()`) with the measured signals.
    pub fn outputs(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self {
            Plant::SinglePhase(p) => p.outputs(x, out),
            Plant::TriPhase(p) => p.outputs(x, t, out),
            Plant::ParallelPair(p) => p.outputs(x, out),
            Plant::FirstOrder(_) => out[0] = x[0],
        }
    }

    /// Named-signal lookup.
    pub fn signal(&self, x: &[f64], t: f64, name: &str) -> Result<f64> {
        let idx = self.output_index(name)?;
        let mut out = vec![0.0; self.output_names().len()];
        self.outputs(x, t, &mut out);
        Ok(out[idx])
    }

    /// Power flows at `(x, u, t)`; `None` for plants without an energy model.
    pub fn power_balance(&self, x: &[f64], u: &[f64], t: f64) -> Result<Option<PowerBalance>> {
        let mut dx = vec![0.0; self.state_len()];
        self.derivatives(x, u, t, &mut dx)?;
        Ok(match self {
            Plant::SinglePhase(p) => Some(p.power_balance(x, u, &dx)),
            Plant::TriPhase(p) => Some(p.power_balance(x, u, t, &dx)),
            Plant::ParallelPair(p) => Some(p.power_balance(x, u, &dx)),
            Plant::FirstOrder(_) => None,
        })
    }

    /// Applies `mutation` in place. Continuous states are preserved; newly
    /// introduced internal states start at zero.
    pub fn apply_event(&mut self, x: &mut [f64], mutation: &Mutation) -> Result<()> {
        match self {
            Plant::SinglePhase(p) => p.apply(x, mutation),
            Plant::TriPhase(p) => p.apply(x, mutation),
            Plant::ParallelPair(p) => p.apply(x, mutation),
            Plant::FirstOrder(_) => Err(Error::EventNotApplicable {
                event: mutation.label(),
                plant: "first_order",
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_signal_rejected() {
        let p = Plant::FirstOrder(FirstOrderLag { tau: 1.0, gain: 1.0 });
        assert_eq!(p.signal(&[0.0], 0.0, "nope"), Err(Error::NoSuchSignal("nope".into())));
        assert_eq!(p.signal(&[2.5], 0.0, "y"), Ok(2.5));
    }

    #[test]
    fn first_order_rejects_events() {
        let mut p = Plant::FirstOrder(FirstOrderLag { tau: 1.0, gain: 1.0 });
        assert!(p.apply_event(&mut [0.0], &Mutation::SetLoadR { r: 1.0 }).is_err());
    }
}
