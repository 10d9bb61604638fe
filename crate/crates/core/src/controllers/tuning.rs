//! Exhaustive-grid ITAE tuning of the PI baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PiGains;
use crate::engine::{self, ControlLoop, ControllerKind, OpenLoopInput, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::itae;
use crate::plants::Plant;

/// Candidate gains; every `(kp, ki)` combination is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct GainGrid {
    pub kp: Vec<f64>,
    pub ki: Vec<f64>,
}

impl GainGrid {
    pub fn new(kp: Vec<f64>, ki: Vec<f64>) -> Self {
        Self { kp, ki }
    }

    /// All candidates ordered lexicographically by `(kp, ki)`.
    pub fn candidates(&self) -> Vec<PiGains> {
        let mut out: Vec<PiGains> = self
            .kp
            .iter()
            .flat_map(|&kp| self.ki.iter().map(move |&ki| PiGains { kp, ki }))
            .collect();
        out.sort_by(|a, b| a.kp.total_cmp(&b.kp).then(a.ki.total_cmp(&b.ki)));
        out.dedup();
        out
    }
}

/// What the PI is tuned against: the initial (pre-event) plant driven through
/// `template`'s measurement, reference and actuation.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningSetup {
    pub template: ControlLoop,
    pub open_loop: Vec<OpenLoopInput>,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub gains: PiGains,
    /// `None` when the closed loop diverged.
    pub itae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub gains: PiGains,
    pub itae: f64,
    pub evaluated: Vec<Candidate>,
}

/// ITAE of the PI loop with `gains` on `plant`, or `None` if it diverges.
pub fn evaluate_pi(plant: &Plant, setup: &TuningSetup, gains: PiGains) -> Result<Option<f64>> {
    let mut lp = setup.template.clone();
    lp.controller = ControllerKind::Pi;
    lp.gains.kp = gains.kp;
    lp.gains.ki = gains.ki;
    let err_name = format!("err:{}", lp.name);
    match engine::run(plant, std::slice::from_ref(&lp), &setup.open_loop, &[], &setup.config) {
        Ok(out) => {
            let err = out.traces.channel(&err_name).expect("loop error channel");
            let j = itae(out.traces.time(), err)?;
            Ok(j.is_finite().then_some(j))
        }
        Err(Error::Diverged { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Grid point minimizing ITAE; ties go to the lexicographically smallest
/// `(kp, ki)`.
pub fn tune_pi_itae(plant: &Plant, setup: &TuningSetup, grid: &GainGrid) -> Result<TuningResult> {
    let candidates = grid.candidates();
    if candidates.is_empty() {
        return Err(Error::param("gain_grid", "empty"));
    }
    let scores: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|g| evaluate_pi(plant, setup, *g))
        .collect::<Result<_>>()?;

    let mut best: Option<(PiGains, f64)> = None;
    for (g, s) in candidates.iter().zip(&scores) {
        if let Some(j) = *s {
            if best.is_none_or(|(_, b)| j < b) {
                best = Some((*g, j));
            }
        }
    }
    let (gains, itae) = best.ok_or(Error::NoStableTuning {
        candidates: candidates.len(),
    })?;
    Ok(TuningResult {
        gains,
        itae,
        evaluated: candidates
            .into_iter()
            .zip(scores)
            .map(|(gains, itae)| Candidate { gains, itae })
            .collect(),
    })
}
