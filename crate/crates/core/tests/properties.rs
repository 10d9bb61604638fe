use proptest::prelude::*;

use microgrid_mfc::controllers::tuning::{evaluate_pi, tune_pi_itae, GainGrid, TuningSetup};
use microgrid_mfc::controllers::{pi_step, IpiGains, SaturationLimits};
use microgrid_mfc::engine::{Actuation, ControlLoop, ControllerKind, Measurement, ReferenceGen, SimConfig};
use microgrid_mfc::metrics::itae;
use microgrid_mfc::plants::{
    FirstOrderLag, GridModel, LoadModel, Mutation, ParallelInverterPair, Perturbation, Plant, RcLoad,
    SinglePhaseInverter, TriPhaseInverter,
};
use microgrid_mfc::scenarios::{builtin, Scenario, BUILTIN_NAMES};

fn positive(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn load() -> impl Strategy<Value = LoadModel> {
    prop_oneof![
        positive(1.0, 1e4).prop_map(|r| LoadModel::Resistive { r }),
        (positive(1.0, 1e4), positive(1e-8, 1e-4)).prop_map(|(r, c)| LoadModel::ParallelRc { r, c }),
        (positive(1.0, 1e4), positive(1e-5, 1e-2)).prop_map(|(r, l)| LoadModel::SeriesRl { r, l }),
        (positive(1.0, 1e4), positive(1.0, 1e3), positive(1e-5, 1e-2), any::<bool>()).prop_map(
            |(r, r2, l2, on)| LoadModel::TwoBranch {
                r,
                r2,
                l2,
                branch2_connected: on
            }
        ),
    ]
}

fn grid() -> impl Strategy<Value = Option<GridModel>> {
    prop_oneof![
        Just(None),
        (50.0..200.0f64, 40.0..70.0f64, any::<bool>(), 0.0..0.3f64, 100.0..1000.0f64, any::<bool>()).prop_map(
            |(amplitude, frequency, enabled, rel, pf, connected)| Some(GridModel {
                amplitude,
                frequency,
                perturbation: Perturbation {
                    enabled,
                    rel,
                    frequency: pf
                },
                connected,
            })
        ),
    ]
}

fn plant() -> impl Strategy<Value = Plant> {
    let e = 100.0..800.0f64;
    let l = || positive(1e-4, 1e-2);
    let c = || positive(1e-6, 1e-4);
    prop_oneof![
        (e.clone(), l(), c(), load()).prop_map(|(e, l, c, load)| Plant::SinglePhase(SinglePhaseInverter {
            e,
            l,
            c,
            load
        })),
        (e.clone(), l(), positive(1.0, 1e4), c(), proptest::array::uniform3(0.5..2.0f64), grid()).prop_map(
            |(e, l, r, c, load_scale, grid)| Plant::TriPhase(TriPhaseInverter {
                e,
                l,
                load: RcLoad { r, c },
                load_scale,
                grid,
            })
        ),
        (e, l(), l(), c(), positive(1.0, 1e4)).prop_map(|(e, l1, l2, c_bus, r)| Plant::ParallelPair(
            ParallelInverterPair { e, l1, l2, c_bus, r }
        )),
    ]
}

fn state_and_inputs(p: &Plant) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (
        proptest::collection::vec(-500.0..500.0f64, p.state_len()),
        proptest::collection::vec(-1.0..=1.0f64, p.input_names().len()),
        0.0..0.1f64,
    )
}

fn is_grid_tied(p: &Plant) -> bool {
    matches!(p, Plant::TriPhase(TriPhaseInverter { grid: Some(g), .. }) if g.connected)
}

proptest! {
    #[test]
    fn origin_is_an_equilibrium(p in plant()) {
        prop_assume!(!is_grid_tied(&p));
        let x = vec![0.0; p.state_len()];
        let u = vec![0.0; p.input_names().len()];
        let mut dx = vec![1.0; x.len()];
        p.derivatives(&x, &u, 0.0, &mut dx).unwrap();
        prop_assert!(dx.iter().all(|d| *d == 0.0), "{:?}", dx);
    }

    #[test]
    fn energy_bookkeeping_balances(
        (p, (x, u, t)) in plant().prop_flat_map(|p| (Just(p), state_and_inputs(&p)))
    ) {
        let balance = p.power_balance(&x, &u, t).unwrap().unwrap();
        prop_assert!(balance.relative_residual() < 1e-6, "{:?}", balance);
    }

    #[test]
    fn events_preserve_existing_state(
        (p, (x, _, t)) in plant().prop_flat_map(|p| (Just(p), state_and_inputs(&p))),
        r in positive(1.0, 1e4),
        c in positive(1e-8, 1e-5),
    ) {
        let x = match p {
            Plant::TriPhase(tp) if is_grid_tied(&p) => {
                let mut x = x;
                let init = Plant::TriPhase(tp).initial_state(t);
                x[3..].copy_from_slice(&init[3..]);
                x
            }
            _ => x,
        };
        let mutations = [
            Mutation::SetLoadR { r },
            Mutation::ConnectBranch2,
            Mutation::SetTriLoad { r, c },
            Mutation::OpenGridBreaker,
            Mutation::EnablePerturbation { rel: 0.1, frequency: 500.0 },
        ];
        for m in mutations {
            let mut plant = p;
            let mut after = x.clone();
            if plant.apply_event(&mut after, &m).is_err() {
                continue;
            }
            let newly_connected = matches!(
                (p, m),
                (Plant::SinglePhase(SinglePhaseInverter { load: LoadModel::TwoBranch { branch2_connected: false, .. }, .. }),
                 Mutation::ConnectBranch2)
            );
            for (i, (a, b)) in x.iter().zip(&after).enumerate() {
                if newly_connected && i == 2 {
                    prop_assert_eq!(*b, 0.0);
                } else {
                    prop_assert_eq!(a, b, "{:?} state {}", m, i);
                }
            }
        }
    }

    #[test]
    fn disconnected_branch_matches_resistive_bitwise(
        e in 100.0..800.0f64, l in positive(1e-4, 1e-2), c in positive(1e-6, 1e-4),
        r in positive(1.0, 1e4), r2 in positive(1.0, 1e3), l2 in positive(1e-5, 1e-2),
        x in proptest::array::uniform2(-500.0..500.0f64), u in -1.0..=1.0f64,
    ) {
        let two = Plant::SinglePhase(SinglePhaseInverter {
            e, l, c, load: LoadModel::TwoBranch { r, r2, l2, branch2_connected: false },
        });
        let res = Plant::SinglePhase(SinglePhaseInverter { e, l, c, load: LoadModel::Resistive { r } });
        let state = [x[0], x[1], 0.0];
        let (mut a, mut b) = (vec![0.0; 3], vec![0.0; 3]);
        two.derivatives(&state, &[u], 0.0, &mut a).unwrap();
        res.derivatives(&state, &[u], 0.0, &mut b).unwrap();
        prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
        prop_assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn unperturbed_grid_is_balanced(amplitude in 1.0..400.0f64, f in 40.0..70.0f64, t in 0.0..1.0f64) {
        let g = GridModel::new(amplitude, f);
        let sum: f64 = (0..3).map(|ph| g.voltage(ph, t)).sum();
        prop_assert!(sum.abs() <= 1e-9 * amplitude, "{}", sum);
    }

    #[test]
    fn pi_command_within_limits(
        acc in -1e3..1e3f64, err in -1e6..1e6f64, kp in -1e3..1e3f64, ki in -1e3..1e3f64,
        lo in -2.0..0.0f64, width in 1e-3..4.0f64,
    ) {
        let limits = SaturationLimits::new(lo, lo + width).unwrap();
        let (u, _) = pi_step(acc, err, kp, ki, 1e-4, &limits).unwrap();
        prop_assert!(limits.contains(u));
    }

    #[test]
    fn itae_nonnegative_and_zero_only_for_zero_error(
        err in proptest::collection::vec(prop_oneof![Just(0.0), -10.0..10.0f64], 2..200),
    ) {
        let t: Vec<f64> = (0..err.len()).map(|k| (k + 1) as f64 * 1e-3).collect();
        let j = itae(&t, &err).unwrap();
        prop_assert!(j >= 0.0);
        prop_assert_eq!(j == 0.0, err.iter().all(|e| *e == 0.0));
        let zeros = vec![0.0; err.len()];
        prop_assert_eq!(itae(&t, &zeros).unwrap(), 0.0);
    }
}

fn lag_setup() -> (Plant, TuningSetup) {
    let plant = Plant::FirstOrder(FirstOrderLag { tau: 1.0, gain: 1.0 });
    let template = ControlLoop {
        name: "y".into(),
        controller: ControllerKind::Pi,
        alpha: 1.0,
        order: 1,
        gains: IpiGains { kp: 0.0, ki: 0.0 },
        limits: SaturationLimits { u_min: -100.0, u_max: 100.0 },
        measurement: Measurement::signal("y"),
        reference: ReferenceGen::Constant { value: 1.0 },
        actuation: Actuation::Direct { slot: "u".into() },
    };
    let config = SimConfig {
        t_end: 3.0,
        tc: 1e-2,
        substeps: 4,
        record_decimation: 1,
    };
    (
        plant,
        TuningSetup {
            template,
            open_loop: vec![],
            config,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tuned_gains_beat_every_grid_point(
        kp in proptest::collection::vec(0.0..20.0f64, 1..4),
        ki in proptest::collection::vec(0.0..20.0f64, 1..4),
    ) {
        let (plant, setup) = lag_setup();
        let grid = GainGrid::new(kp, ki);
        let best = tune_pi_itae(&plant, &setup, &grid).unwrap();
        for g in grid.candidates() {
            // independent re-evaluation, not the tuner's cached scores
            if let Some(j) = evaluate_pi(&plant, &setup, g).unwrap() {
                prop_assert!(best.itae <= j, "{:?} -> {} beats {:?} -> {}", g, j, best.gains, best.itae);
            }
        }
    }
}

#[test]
fn builtin_scenarios_round_trip_and_run() {
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(back, s, "{name}");
        let a = s.run().unwrap_or_else(|e| panic!("{name}: {e}"));
        let b = back.run().unwrap();
        assert_eq!(a.traces, b.traces, "{name}");
    }
}
