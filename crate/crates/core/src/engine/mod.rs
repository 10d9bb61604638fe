//! Fixed-step sampled-data simulation.
//!
//! At every control instant `k * tc` the plant outputs are read, references
//! evaluated and every loop stepped in the order given. The resulting commands
//! are held over `substeps` RK4 steps to the next instant. Events fire at
//! the integration grid point nearest to their requested time.

mod rk4;
mod trace;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::controllers::{IpiController, IpiGains, PiController, PiGains, SaturationLimits, UltraLocalParams};
use crate::error::{Error, Result};
use crate::metrics::PowerEstimator;
use crate::plants::{Event, Plant};

pub use rk4::{integrate_interval, Rk4};
pub use trace::{ChannelGroup, TraceSet};

/// Any state magnitude above this is treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct SimConfig {
    /// seconds
    pub t_end: f64,
    /// control period (s)
    pub tc: f64,
    /// RK4 steps per control period
    pub substeps: u32,
    /// record every n-th control instant
    pub record_decimation: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 0.04,
            tc: 1e-4,
            substeps: 10,
            record_decimation: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tc.is_finite() && self.tc > 0.0) {
            return Err(Error::param("sim.tc", format!("must be positive, got {}", self.tc)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::param("sim.t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if self.substeps == 0 {
            return Err(Error::param("sim.substeps", "must be >= 1"));
        }
        if self.record_decimation == 0 {
            return Err(Error::param("sim.record_decimation", "must be >= 1"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.tc / self.substeps as f64
    }

    /// Index of the last control instant.
    pub fn last_instant(&self) -> u64 {
        (self.t_end / self.tc + 1e-9).floor() as u64
    }

    /// Integration grid index nearest to `t`; exact ties round down.
    pub fn snap_index(&self, t: f64) -> u64 {
        let n = t / self.dt();
        let floor = n.floor();
        // treat representation noise of a few ulps as an exact grid hit
        let frac = n - floor;
        if frac > 0.5 + 1e-9 {
            floor as u64 + 1
        } else {
            floor as u64
        }
    }

    pub fn snap_time(&self, t: f64) -> f64 {
        self.snap_index(t) as f64 * self.dt()
    }
}

/// Reference or duty-cycle waveform, a pure function of `(t, scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceGen {
    Constant { value: f64 },
    Sinusoid { amplitude: f64, frequency: f64, phase: f64 },
    /// Sinusoid whose amplitude is multiplied by a runtime scale.
    ScaledSinusoid { amplitude: f64, frequency: f64, phase: f64 },
}

impl ReferenceGen {
    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        ReferenceGen::Sinusoid {
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn eval(&self, t: f64, scale: f64) -> f64 {
        match *self {
            ReferenceGen::Constant { value } => value,
            ReferenceGen::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
            ReferenceGen::ScaledSinusoid {
                amplitude,
                frequency,
                phase,
            } => scale * amplitude * (2.0 * PI * frequency * t + phase).sin(),
        }
    }

    /// Peak magnitude at unit scale.
    pub fn amplitude(&self) -> f64 {
        match *self {
            ReferenceGen::Constant { value } => value.abs(),
            ReferenceGen::Sinusoid { amplitude, .. } | ReferenceGen::ScaledSinusoid { amplitude, .. } => {
                amplitude.abs()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Ipi,
    Pi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measurement {
    /// A plant output read directly.
    Signal { name: String },
    /// Moving-average active power of `voltage * current` over one period of
    /// `fundamental_hz`.
    ActivePower {
        voltage: String,
        current: String,
        fundamental_hz: f64,
    },
}

impl Measurement {
    pub fn signal(name: &str) -> Self {
        Measurement::Signal { name: name.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Actuation {
    /// The controller output is the duty-cycle of `slot`.
    Direct { slot: String },
    /// The controller output scales the amplitude of `template`, whose value
    /// is the duty-cycle of `slot`.
    AmplitudeScale { slot: String, template: ReferenceGen },
}

impl Actuation {
    pub fn slot(&self) -> &str {
        match self {
            Actuation::Direct { slot } | Actuation::AmplitudeScale { slot, .. } => slot,
        }
    }
}

fn default_order() -> u8 {
    2
}

/// One controller paired with one measurement, one reference and one plant
/// input slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ControlLoop {
    pub name: String,
    pub controller: ControllerKind,
    /// ultra-local model gain (i-PI only)
    pub alpha: f64,
    /// ultra-local model order, 1 or 2 (i-PI only)
    #[serde(default = "default_order")]
    pub order: u8,
    pub gains: IpiGains,
    #[serde(default)]
    pub limits: SaturationLimits,
    pub measurement: Measurement,
    pub reference: ReferenceGen,
    pub actuation: Actuation,
}

/// A plant input driven by a fixed waveform instead of a controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct OpenLoopInput {
    pub slot: String,
    pub waveform: ReferenceGen,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Evaluate the plant power balance before every integration step.
    pub check_energy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub label: String,
    pub requested: f64,
    pub snapped: f64,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub traces: TraceSet,
    pub events: Vec<EventRecord>,
    /// Largest relative power-balance residual seen (0 unless checked).
    pub max_energy_residual: f64,
    /// State vector before and after each fired event.
    pub event_states: Vec<(Vec<f64>, Vec<f64>)>,
    pub final_state: Vec<f64>,
}

enum Controller {
    Ipi(IpiController),
    /// PI acting on the previous instant's error, matching the i-PI timing.
    Pi { pi: PiController, pending: Option<f64> },
}

impl Controller {
    fn step(&mut self, y: f64, r: f64) -> Result<f64> {
        match self {
            Controller::Ipi(c) => c.step(y, r),
            Controller::Pi { pi, pending } => {
                if !(y.is_finite() && r.is_finite()) {
                    return Err(Error::InvalidMeasurement(if y.is_finite() { r } else { y }));
                }
                let u = match pending.take() {
                    Some(e) => pi.step(e)?,
                    None => 0.0_f64.clamp(pi.limits.u_min, pi.limits.u_max),
                };
                *pending = Some(r - y);
                Ok(u)
            }
        }
    }
}

enum Sensor {
    Direct(usize),
    Power {
        v: usize,
        i: usize,
        estimator: PowerEstimator,
    },
}

struct ActiveLoop {
    controller: Controller,
    sensor: Sensor,
    reference: ReferenceGen,
    slot: usize,
    template: Option<ReferenceGen>,
}

fn build_loop(plant: &Plant, spec: &ControlLoop, tc: f64) -> Result<ActiveLoop> {
    spec.limits.validate()?;
    let controller = match spec.controller {
        ControllerKind::Ipi => {
            let params = UltraLocalParams::new(spec.alpha, spec.order, tc)?;
            Controller::Ipi(IpiController::new(params, spec.gains, spec.limits)?)
        }
        ControllerKind::Pi => Controller::Pi {
            pi: PiController::new(
                PiGains {
                    kp: spec.gains.kp,
                    ki: spec.gains.ki,
                },
                spec.limits,
                tc,
            )?,
            pending: None,
        },
    };
    let sensor = match &spec.measurement {
        Measurement::Signal { name } => Sensor::Direct(plant.output_index(name)?),
        Measurement::ActivePower {
            voltage,
            current,
            fundamental_hz,
        } => Sensor::Power {
            v: plant.output_index(voltage)?,
            i: plant.output_index(current)?,
            estimator: PowerEstimator::new(*fundamental_hz, tc)?,
        },
    };
    let template = match &spec.actuation {
        Actuation::Direct { .. } => None,
        Actuation::AmplitudeScale { template, .. } => Some(*template),
    };
    Ok(ActiveLoop {
        controller,
        sensor,
        reference: spec.reference,
        slot: plant.input_index(spec.actuation.slot())?,
        template,
    })
}

fn channel_names(plant: &Plant, loops: &[ControlLoop]) -> Vec<String> {
    let mut names: Vec<String> = plant.output_names().iter().map(|s| s.to_string()).collect();
    for l in loops {
        if !matches!(l.measurement, Measurement::Signal { .. }) {
            names.push(format!("meas:{}", l.name));
        }
    }
    names.extend(loops.iter().map(|l| format!("ref:{}", l.name)));
    names.extend(plant.input_names().iter().map(|s| format!("u:{s}")));
    for l in loops {
        if !matches!(l.actuation, Actuation::Direct { .. }) {
            names.push(format!("cmd:{}", l.name));
        }
    }
    names.extend(loops.iter().map(|l| format!("err:{}", l.name)));
    names
}

/// Simulates `plant` under `loops` and `open_loop` drives.
pub fn run(
    plant: &Plant,
    loops: &[ControlLoop],
    open_loop: &[OpenLoopInput],
    events: &[Event],
    config: &SimConfig,
) -> Result<RunOutput> {
    run_with(plant, loops, open_loop, events, config, &RunOptions::default())
}

pub fn run_with(
    plant: &Plant,
    loops: &[ControlLoop],
    open_loop: &[OpenLoopInput],
    events: &[Event],
    config: &SimConfig,
    options: &RunOptions,
) -> Result<RunOutput> {
    config.validate()?;
    plant.validate()?;
    let mut plant = *plant;

    let mut names_seen = std::collections::HashSet::new();
    for l in loops {
        if !names_seen.insert(l.name.as_str()) {
            return Err(Error::InvalidScenario(format!("duplicate loop name `{}`", l.name)));
        }
    }

    let mut active: Vec<ActiveLoop> = loops
        .iter()
        .map(|l| build_loop(&plant, l, config.tc))
        .collect::<Result<_>>()?;
    let drives: Vec<(usize, ReferenceGen)> = open_loop
        .iter()
        .map(|o| Ok((plant.input_index(&o.slot)?, o.waveform)))
        .collect::<Result<_>>()?;

    let n_inputs = plant.input_names().len();
    let mut drivers = vec![0usize; n_inputs];
    for slot in active.iter().map(|a| a.slot).chain(drives.iter().map(|d| d.0)) {
        drivers[slot] += 1;
    }
    if let Some(slot) = drivers.iter().position(|&d| d != 1) {
        return Err(Error::InvalidScenario(format!(
            "input slot `{}` has {} drivers, expected exactly one",
            plant.input_names()[slot],
            drivers[slot]
        )));
    }

    if events.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidScenario("events must be sorted by time".into()));
    }
    if let Some(e) = events.iter().find(|e| !(e.time.is_finite() && e.time >= 0.0)) {
        return Err(Error::InvalidScenario(format!("event time {} is negative", e.time)));
    }
    let snapped: Vec<u64> = events.iter().map(|e| config.snap_index(e.time)).collect();
    let mut records: Vec<EventRecord> = events
        .iter()
        .zip(&snapped)
        .map(|(e, &idx)| EventRecord {
            label: e.mutation.label(),
            requested: e.time,
            snapped: idx as f64 * config.dt(),
            fired: false,
        })
        .collect();

    let names = channel_names(&plant, loops);
    let mut traces = TraceSet::new(names);
    let n_out = plant.output_names().len();
    let mut outputs = vec![0.0; n_out];
    let mut row = Vec::with_capacity(traces.names().len());
    let mut refs = vec![0.0; active.len()];
    let mut errs = vec![0.0; active.len()];
    let mut meas_extra = Vec::new();
    let mut cmds_extra = Vec::new();
    let mut u = vec![0.0; n_inputs];

    let mut x = plant.initial_state(0.0);
    let mut rk4 = Rk4::new(x.len());
    let dt = config.dt();
    let substeps = config.substeps as u64;
    let last = config.last_instant();
    let mut next_event = 0usize;
    let mut max_residual = 0.0_f64;
    let mut event_states = Vec::new();

    for k in 0..=last {
        let t = k as f64 * config.tc;
        plant.outputs(&x, t, &mut outputs);
        meas_extra.clear();
        cmds_extra.clear();

        for (j, lp) in active.iter_mut().enumerate() {
            let y = match &mut lp.sensor {
                Sensor::Direct(idx) => outputs[*idx],
                Sensor::Power { v, i, estimator } => {
                    let p = estimator.push(outputs[*v], outputs[*i]);
                    meas_extra.push(p);
                    p
                }
            };
            let r = lp.reference.eval(t, 1.0);
            let cmd = lp.controller.step(y, r)?;
            refs[j] = r;
            errs[j] = r - y;
            u[lp.slot] = match &lp.template {
                Some(template) => {
                    cmds_extra.push(cmd);
                    template.eval(t, cmd)
                }
                None => cmd,
            };
        }
        for (slot, waveform) in &drives {
            u[*slot] = waveform.eval(t, 1.0);
        }

        if k % config.record_decimation as u64 == 0 {
            row.clear();
            row.extend_from_slice(&outputs);
            row.extend_from_slice(&meas_extra);
            row.extend_from_slice(&refs);
            row.extend_from_slice(&u);
            row.extend_from_slice(&cmds_extra);
            row.extend_from_slice(&errs);
            traces.push_row(t, &row);
        }
        if k == last {
            break;
        }

        for s in 0..substeps {
            let grid_index = k * substeps + s;
            let ts = t + s as f64 * dt;
            while next_event < events.len() && snapped[next_event] <= grid_index {
                let before = x.clone();
                plant.apply_event(&mut x, &events[next_event].mutation)?;
                event_states.push((before, x.clone()));
                records[next_event].fired = true;
                next_event += 1;
            }
            if options.check_energy {
                if let Some(balance) = plant.power_balance(&x, &u, ts)? {
                    max_residual = max_residual.max(balance.relative_residual());
                }
            }
            rk4.step(|tt, xx, dx| plant.derivatives(xx, &u, tt, dx), ts, &mut x, dt)?;
            if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
                return Err(Error::Diverged { t: ts + dt });
            }
        }
    }

    Ok(RunOutput {
        traces,
        events: records,
        max_energy_residual: max_residual,
        event_states,
        final_state: x,
    })
}
