//! PI vs i-PI comparison on a single-loop scenario.

use serde::{Deserialize, Serialize};

use super::{measurement_channel, Scenario};
use crate::controllers::tuning::{tune_pi_itae, GainGrid, TuningSetup};
use crate::controllers::PiGains;
use crate::engine::{ControllerKind, RunOutput, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{itae, settling_metrics, window_start};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerMetrics {
    /// ITAE on the evaluation window, time measured from its start
    pub itae: f64,
    pub rms_error: f64,
    pub peak_error: f64,
    /// `None` if the error never stays inside the band
    pub settling_time: Option<f64>,
    pub diverged: bool,
}

impl ControllerMetrics {
    fn diverged() -> Self {
        Self {
            itae: f64::INFINITY,
            rms_error: f64::INFINITY,
            peak_error: f64::INFINITY,
            settling_time: None,
            diverged: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub window_start: f64,
    pub window_end: f64,
    pub pi_gains: PiGains,
    pub pi_tuning_itae: f64,
    pub pi: ControllerMetrics,
    pub ipi: ControllerMetrics,
}

/// kp in {0, 1e-4, ..., 1}, ki in {0, 0.1, ..., 1000}.
pub fn default_pi_grid() -> GainGrid {
    GainGrid::new(
        vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        vec![0.0, 0.1, 1.0, 10.0, 100.0, 1000.0],
    )
}

/// Tunes a PI on the pre-event plant, then runs both controllers through the
/// full scenario and scores them after the first event.
pub fn compare_pi_ipi(scenario: &Scenario, grid: &GainGrid) -> Result<ComparisonReport> {
    if scenario.loops.len() != 1 {
        return Err(Error::InvalidScenario(format!(
            "comparison needs exactly one control loop, `{}` has {}",
            scenario.name,
            scenario.loops.len()
        )));
    }
    scenario.validate()?;
    let from_t = scenario.metric_start();
    let tuning_horizon = scenario.first_event_time().unwrap_or(scenario.sim.t_end);
    let setup = TuningSetup {
        template: scenario.loops[0].clone(),
        open_loop: scenario.open_loop.clone(),
        config: SimConfig {
            t_end: tuning_horizon,
            ..scenario.sim
        },
    };
    let tuned = tune_pi_itae(&scenario.plant, &setup, grid)?;

    let mut pi_scenario = scenario.clone();
    pi_scenario.loops[0].controller = ControllerKind::Pi;
    pi_scenario.loops[0].gains.kp = tuned.gains.kp;
    pi_scenario.loops[0].gains.ki = tuned.gains.ki;
    let mut ipi_scenario = scenario.clone();
    ipi_scenario.loops[0].controller = ControllerKind::Ipi;

    let (pi_run, ipi_run) = rayon::join(|| pi_scenario.run(), || ipi_scenario.run());
    Ok(ComparisonReport {
        scenario: scenario.name.clone(),
        window_start: from_t,
        window_end: scenario.sim.t_end,
        pi_gains: tuned.gains,
        pi_tuning_itae: tuned.itae,
        pi: score(scenario, pi_run, from_t)?,
        ipi: score(scenario, ipi_run, from_t)?,
    })
}

fn score(scenario: &Scenario, run: Result<RunOutput>, from_t: f64) -> Result<ControllerMetrics> {
    let out = match run {
        Ok(out) => out,
        Err(Error::Diverged { .. }) => return Ok(ControllerMetrics::diverged()),
        Err(e) => return Err(e),
    };
    loop_metrics(scenario, &out, 0, from_t)
}

/// Metrics of loop `index` of `scenario` on `[from_t, end]`.
pub fn loop_metrics(scenario: &Scenario, out: &RunOutput, index: usize, from_t: f64) -> Result<ControllerMetrics> {
    let lp = &scenario.loops[index];
    let traces = &out.traces;
    let lookup = |name: String| traces.channel(&name).ok_or(Error::NoSuchSignal(name));
    let y = lookup(measurement_channel(lp))?;
    let r = lookup(format!("ref:{}", lp.name))?;
    let time = traces.time();
    let m = settling_metrics(time, y, r, scenario.metrics.band, from_t)?;
    let start = window_start(time, from_t);
    let shifted: Vec<f64> = time[start..].iter().map(|t| t - time[start]).collect();
    let err: Vec<f64> = (start..time.len()).map(|k| r[k] - y[k]).collect();
    Ok(ControllerMetrics {
        itae: itae(&shifted, &err)?,
        rms_error: m.rms_error,
        peak_error: m.peak_error,
        settling_time: m.settling_time.is_finite().then_some(m.settling_time),
        diverged: false,
    })
}
