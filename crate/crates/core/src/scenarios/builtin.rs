//! Built-in inverter and microgrid scenarios.
//!
//! Circuit values: dc bus 400 V, 1 mH inductors, 10 uF capacitors, 0.1 ms
//! control period, `alpha = 30`. Reference amplitudes (100 V, 10 A, 50 W) and
//! the grid amplitude are defaults chosen for this crate.

use std::f64::consts::PI;

use super::{MetricRequest, Scenario};
use crate::controllers::{IpiGains, SaturationLimits};
use crate::engine::{Actuation, ControlLoop, ControllerKind, Measurement, OpenLoopInput, ReferenceGen, SimConfig};
use crate::error::{Error, Result};
use crate::plants::triphase::PHASE_OFFSETS;
use crate::plants::{
    Event, GridModel, LoadModel, Mutation, ParallelInverterPair, Perturbation, Plant, RcLoad, SinglePhaseInverter,
    TriPhaseInverter,
};

pub const DC_BUS_V: f64 = 400.0;
pub const INDUCTANCE_H: f64 = 1e-3;
pub const CAPACITANCE_F: f64 = 10e-6;
pub const ALPHA: f64 = 30.0;
pub const TC_S: f64 = 1e-4;
pub const FUNDAMENTAL_HZ: f64 = 50.0;

pub const VOLTAGE_REF_PEAK: f64 = 100.0;
pub const CURRENT_REF_PEAK: f64 = 10.0;
pub const POWER_REF_W: f64 = 50.0;
/// Peak phase voltage of the grid. Kept below `E / 2` (plus perturbation) so
/// a midpoint-referenced leg can still oppose it.
pub const GRID_PEAK_V: f64 = 150.0;

/// Fig. 5 style gain presets for the multiple-load case.
pub const MULTI_LOAD_PRESET_A: IpiGains = IpiGains { kp: 20.0, ki: 0.0 };
pub const MULTI_LOAD_PRESET_B: IpiGains = IpiGains { kp: 50.0, ki: 100.0 };

pub const BUILTIN_NAMES: &[&str] = &[
    "single_load",
    "multiple_loads_a",
    "multiple_loads_b",
    "multiple_loads_open_loop",
    "triphase_standalone",
    "grid_disconnect",
    "grid_disconnect_uncontrolled",
    "power_control",
    "parallel_inverters",
];

pub fn builtin(name: &str) -> Result<Scenario> {
    Ok(match name {
        "single_load" => scenario_single_load(),
        "multiple_loads_a" => named("multiple_loads_a", scenario_multiple_loads(MULTI_LOAD_PRESET_A)),
        "multiple_loads_b" => named("multiple_loads_b", scenario_multiple_loads(MULTI_LOAD_PRESET_B)),
        "multiple_loads_open_loop" => scenario_multiple_loads_open_loop(),
        "triphase_standalone" => scenario_triphase_standalone(),
        "grid_disconnect" => scenario_grid_disconnect(),
        "grid_disconnect_uncontrolled" => scenario_grid_disconnect_uncontrolled(),
        "power_control" => scenario_power_control(),
        "parallel_inverters" => scenario_parallel_inverters(),
        _ => {
            return Err(Error::UnknownScenario {
                name: name.to_string(),
                available: BUILTIN_NAMES.join(", "),
            })
        }
    })
}

fn named(name: &str, scenario: Scenario) -> Scenario {
    Scenario {
        name: name.into(),
        ..scenario
    }
}

fn sim(t_end: f64) -> SimConfig {
    SimConfig {
        t_end,
        tc: TC_S,
        substeps: 10,
        record_decimation: 1,
    }
}

fn ipi_loop(name: &str, signal: &str, slot: &str, gains: IpiGains, reference: ReferenceGen) -> ControlLoop {
    ControlLoop {
        name: name.into(),
        controller: ControllerKind::Ipi,
        alpha: ALPHA,
        order: 2,
        gains,
        limits: SaturationLimits::duty_cycle(),
        measurement: Measurement::signal(signal),
        reference,
        actuation: Actuation::Direct { slot: slot.into() },
    }
}

fn single_phase(load: LoadModel) -> Plant {
    Plant::SinglePhase(SinglePhaseInverter {
        e: DC_BUS_V,
        l: INDUCTANCE_H,
        c: CAPACITANCE_F,
        load,
    })
}

fn voltage_reference() -> ReferenceGen {
    ReferenceGen::sinusoid(VOLTAGE_REF_PEAK, FUNDAMENTAL_HZ, 0.0)
}

/// Voltage-controlled single-phase inverter, load 10 -> 1000 ohm at 20 ms.
pub fn scenario_single_load() -> Scenario {
    Scenario {
        name: "single_load".into(),
        sim: sim(0.04),
        metrics: MetricRequest::default(),
        plant: single_phase(LoadModel::Resistive { r: 10.0 }),
        loops: vec![ipi_loop(
            "v_out",
            "v_out",
            "u",
            IpiGains { kp: 20.0, ki: 0.0 },
            voltage_reference(),
        )],
        open_loop: vec![],
        events: vec![Event::new(0.02, Mutation::SetLoadR { r: 1000.0 })],
    }
}

fn multiple_loads_plant() -> Plant {
    single_phase(LoadModel::TwoBranch {
        r: 10.0,
        r2: 10.0,
        l2: INDUCTANCE_H,
        branch2_connected: false,
    })
}

const BRANCH2_TIME: f64 = 0.0042;

/// Voltage-controlled inverter; a series RL load joins at 4.2 ms.
pub fn scenario_multiple_loads(gains: IpiGains) -> Scenario {
    Scenario {
        name: "multiple_loads".into(),
        sim: sim(0.02),
        metrics: MetricRequest::default(),
        plant: multiple_loads_plant(),
        loops: vec![ipi_loop("v_out", "v_out", "u", gains, voltage_reference())],
        open_loop: vec![],
        events: vec![Event::new(BRANCH2_TIME, Mutation::ConnectBranch2)],
    }
}

/// Same circuit driven by a fixed duty-cycle sinusoid sized for the
/// voltage reference at no load.
pub fn scenario_multiple_loads_open_loop() -> Scenario {
    Scenario {
        name: "multiple_loads_open_loop".into(),
        loops: vec![],
        open_loop: vec![OpenLoopInput {
            slot: "u".into(),
            waveform: ReferenceGen::sinusoid(VOLTAGE_REF_PEAK / DC_BUS_V, FUNDAMENTAL_HZ, 0.0),
        }],
        ..scenario_multiple_loads(MULTI_LOAD_PRESET_A)
    }
}

const TRI_GAINS: IpiGains = IpiGains { kp: 500.0, ki: 300.0 };
const PHASES: [(&str, &str, &str); 3] = [("a", "I_L1a", "u_a"), ("b", "I_L2a", "u_b"), ("c", "I_L3a", "u_c")];

fn current_loops() -> Vec<ControlLoop> {
    PHASES
        .iter()
        .zip(PHASE_OFFSETS)
        .map(|(&(name, signal, slot), phase)| {
            ipi_loop(
                name,
                signal,
                slot,
                TRI_GAINS,
                ReferenceGen::sinusoid(CURRENT_REF_PEAK, FUNDAMENTAL_HZ, phase),
            )
        })
        .collect()
}

fn tri_phase(grid: Option<GridModel>) -> Plant {
    Plant::TriPhase(TriPhaseInverter {
        e: DC_BUS_V,
        l: INDUCTANCE_H,
        load: RcLoad {
            r: 10.0,
            c: CAPACITANCE_F,
        },
        load_scale: [1.0; 3],
        grid,
    })
}

/// Per-phase current control in stand-alone mode; RC load steps to
/// 1000 ohm / 0.1 uF at 12 ms.
pub fn scenario_triphase_standalone() -> Scenario {
    Scenario {
        name: "triphase_standalone".into(),
        sim: sim(0.03),
        metrics: MetricRequest::default(),
        plant: tri_phase(None),
        loops: current_loops(),
        open_loop: vec![],
        events: vec![Event::new(0.012, Mutation::SetTriLoad { r: 1000.0, c: 0.1e-6 })],
    }
}

fn perturbed_grid() -> GridModel {
    GridModel {
        amplitude: GRID_PEAK_V,
        frequency: FUNDAMENTAL_HZ,
        perturbation: Perturbation {
            enabled: true,
            rel: 0.25,
            frequency: 500.0,
        },
        connected: true,
    }
}

/// Grid-connected current control with a 25 % / 500 Hz grid perturbation;
/// the breaker opens at 15 ms.
pub fn scenario_grid_disconnect() -> Scenario {
    Scenario {
        name: "grid_disconnect".into(),
        sim: sim(0.03),
        metrics: MetricRequest::default(),
        plant: tri_phase(Some(perturbed_grid())),
        loops: current_loops(),
        open_loop: vec![],
        events: vec![Event::new(0.015, Mutation::OpenGridBreaker)],
    }
}

/// Grid-disconnect circuit with fixed duty-cycles that would inject the
/// reference currents into the unperturbed grid.
pub fn scenario_grid_disconnect_uncontrolled() -> Scenario {
    let w = 2.0 * PI * FUNDAMENTAL_HZ;
    let drop = INDUCTANCE_H * w * CURRENT_REF_PEAK;
    let amplitude = GRID_PEAK_V.hypot(drop) / (DC_BUS_V / 2.0);
    let lead = drop.atan2(GRID_PEAK_V);
    Scenario {
        name: "grid_disconnect_uncontrolled".into(),
        loops: vec![],
        open_loop: PHASES
            .iter()
            .zip(PHASE_OFFSETS)
            .map(|(&(_, _, slot), phase)| OpenLoopInput {
                slot: slot.into(),
                waveform: ReferenceGen::sinusoid(amplitude, FUNDAMENTAL_HZ, phase + lead),
            })
            .collect(),
        ..scenario_grid_disconnect()
    }
}

/// Direct active-power control: the i-PI output scales the amplitude of a
/// unit 50 Hz duty-cycle template. Load 100 -> 50 ohm at 10 ms.
pub fn scenario_power_control() -> Scenario {
    Scenario {
        name: "power_control".into(),
        sim: sim(0.06),
        metrics: MetricRequest::default(),
        plant: single_phase(LoadModel::Resistive { r: 100.0 }),
        loops: vec![ControlLoop {
            name: "p".into(),
            controller: ControllerKind::Ipi,
            alpha: ALPHA,
            order: 2,
            gains: IpiGains { kp: 20.0, ki: 0.0 },
            limits: SaturationLimits { u_min: 0.0, u_max: 1.0 },
            measurement: Measurement::ActivePower {
                voltage: "v_out".into(),
                current: "i_out".into(),
                fundamental_hz: FUNDAMENTAL_HZ,
            },
            reference: ReferenceGen::Constant { value: POWER_REF_W },
            actuation: Actuation::AmplitudeScale {
                slot: "u".into(),
                template: ReferenceGen::ScaledSinusoid {
                    amplitude: 1.0,
                    frequency: FUNDAMENTAL_HZ,
                    phase: 0.0,
                },
            },
        }],
        open_loop: vec![],
        events: vec![Event::new(0.01, Mutation::SetLoadR { r: 50.0 })],
    }
}

pub const PARALLEL_LOAD_R: f64 = 100.0;
/// Inverter 2 carries half of the nominal load current.
pub const PARALLEL_CURRENT_REF_PEAK: f64 = 0.5 * VOLTAGE_REF_PEAK / PARALLEL_LOAD_R;

/// Two inverters on one bus: inverter 1 regulates `v_out`, inverter 2 its
/// own inductor current `i_L2`.
pub fn scenario_parallel_inverters() -> Scenario {
    let gains = IpiGains { kp: 20.0, ki: 100.0 };
    Scenario {
        name: "parallel_inverters".into(),
        sim: sim(0.04),
        metrics: MetricRequest::default(),
        plant: Plant::ParallelPair(ParallelInverterPair {
            e: DC_BUS_V,
            l1: INDUCTANCE_H,
            l2: INDUCTANCE_H,
            c_bus: CAPACITANCE_F,
            r: PARALLEL_LOAD_R,
        }),
        loops: vec![
            ipi_loop("v_out", "v_out", "u1", gains, voltage_reference()),
            ipi_loop(
                "i_L2",
                "i_L2",
                "u2",
                gains,
                ReferenceGen::sinusoid(PARALLEL_CURRENT_REF_PEAK, FUNDAMENTAL_HZ, 0.0),
            ),
        ],
        open_loop: vec![],
        events: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_load_parameters() {
        let s = scenario_single_load();
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.events[0].time, 0.02);
        assert_eq!(s.events[0].mutation, Mutation::SetLoadR { r: 1000.0 });
        let Plant::SinglePhase(p) = s.plant else { panic!() };
        assert_eq!((p.e, p.l, p.c), (400.0, 1e-3, 10e-6));
        assert_eq!(p.load, LoadModel::Resistive { r: 10.0 });
        assert_eq!(s.loops[0].alpha, 30.0);
        assert_eq!(s.loops[0].gains, IpiGains { kp: 20.0, ki: 0.0 });
        assert_eq!(s.sim.tc, 1e-4);
        assert_eq!(s.sim.t_end, 0.04);
    }

    #[test]
    fn multiple_loads_parameters() {
        assert_eq!(MULTI_LOAD_PRESET_A, IpiGains { kp: 20.0, ki: 0.0 });
        assert_eq!(MULTI_LOAD_PRESET_B, IpiGains { kp: 50.0, ki: 100.0 });
        let s = scenario_multiple_loads(MULTI_LOAD_PRESET_B);
        assert_eq!(s.events, vec![Event::new(0.0042, Mutation::ConnectBranch2)]);
        assert_eq!(s.loops[0].gains, MULTI_LOAD_PRESET_B);
        let open = scenario_multiple_loads_open_loop();
        assert!(open.loops.is_empty());
        assert_eq!(open.open_loop.len(), 1);
        assert_eq!(open.events, s.events);
    }

    #[test]
    fn triphase_parameters() {
        let s = scenario_triphase_standalone();
        assert_eq!(s.loops.len(), 3);
        let signals: Vec<_> = s.loops.iter().map(|l| l.measurement.clone()).collect();
        assert_eq!(
            signals,
            ["I_L1a", "I_L2a", "I_L3a"].map(Measurement::signal).to_vec()
        );
        let slots: Vec<_> = s.loops.iter().map(|l| l.actuation.slot().to_string()).collect();
        assert_eq!(slots, ["u_a", "u_b", "u_c"]);
        for l in &s.loops {
            assert_eq!(l.gains, IpiGains { kp: 500.0, ki: 300.0 });
            assert_eq!(l.alpha, 30.0);
        }
        let Plant::TriPhase(p) = s.plant else { panic!() };
        assert_eq!(p.load, RcLoad { r: 10.0, c: 10e-6 });
        assert_eq!(s.events, vec![Event::new(0.012, Mutation::SetTriLoad { r: 1000.0, c: 0.1e-6 })]);
    }

    #[test]
    fn grid_disconnect_parameters() {
        let s = scenario_grid_disconnect();
        let Plant::TriPhase(p) = s.plant else { panic!() };
        let g = p.grid.unwrap();
        assert_eq!((g.perturbation.rel, g.perturbation.frequency), (0.25, 500.0));
        assert!(g.perturbation.enabled && g.connected);
        assert_eq!(s.events, vec![Event::new(0.015, Mutation::OpenGridBreaker)]);
        let u = scenario_grid_disconnect_uncontrolled();
        assert!(u.loops.is_empty());
        assert_eq!(u.open_loop.len(), 3);
    }

    #[test]
    fn power_control_parameters() {
        let s = scenario_power_control();
        let Plant::SinglePhase(p) = s.plant else { panic!() };
        assert_eq!(p.load, LoadModel::Resistive { r: 100.0 });
        assert_eq!(s.events, vec![Event::new(0.01, Mutation::SetLoadR { r: 50.0 })]);
        let l = &s.loops[0];
        assert!(matches!(l.measurement, Measurement::ActivePower { .. }));
        assert_eq!((l.alpha, l.gains), (30.0, IpiGains { kp: 20.0, ki: 0.0 }));
        assert_eq!(l.limits, SaturationLimits { u_min: 0.0, u_max: 1.0 });
    }

    #[test]
    fn parallel_parameters() {
        let s = scenario_parallel_inverters();
        assert_eq!(s.loops.len(), 2);
        assert_eq!(s.loops[0].measurement, Measurement::signal("v_out"));
        assert_eq!(s.loops[1].measurement, Measurement::signal("i_L2"));
        for l in &s.loops {
            assert_eq!((l.alpha, l.gains), (30.0, IpiGains { kp: 20.0, ki: 100.0 }));
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(builtin("nonexistent"), Err(Error::UnknownScenario { .. })));
        for name in BUILTIN_NAMES {
            assert!(builtin(name).unwrap().validate().is_ok(), "{name}");
        }
    }
}
