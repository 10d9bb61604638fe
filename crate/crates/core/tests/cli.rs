use std::fs;
use std::path::Path;
use std::process::Command;

use microgrid_mfc::cli::{read_trace, write_trace, RunReport, EXIT_DIVERGED, EXIT_OK, EXIT_USER_ERROR};
use microgrid_mfc::engine::TraceSet;
use microgrid_mfc::metrics::{itae, settling_metrics, window_start};
use microgrid_mfc::scenarios::{builtin, scenario_single_load, Scenario};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_microgrid-mfc"))
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn run_single_load_emits_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run_in(dir.path(), &["run", "single_load", "--out", "o"]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert!(stdout.contains("v_out"));
    let trace = dir.path().join("o/single_load.csv");
    let report = dir.path().join("o/single_load.report.json");
    assert!(trace.is_file() && report.is_file());

    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,v_out,i_L,i_out,ref:v_out,u:u,err:v_out"));
    let times: Vec<f64> = lines.take(3).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times, vec![0.0, 0.0001, 0.0002]);
    // floor(t_end / tc) + 1 rows
    assert_eq!(text.lines().count() - 1, 401);
}

#[test]
fn report_metrics_recompute_from_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["run", "single_load", "--out", "."]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    let report: RunReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("single_load.report.json")).unwrap()).unwrap();
    let traces = read_trace(&dir.path().join("single_load.csv")).unwrap();
    assert_eq!(report.loops.len(), 1);
    let lp = &report.loops[0];
    assert_eq!(lp.from_t, 0.02);

    let t = traces.time();
    let y = traces.channel("v_out").unwrap();
    let r = traces.channel("ref:v_out").unwrap();
    let m = settling_metrics(t, y, r, 0.05, lp.from_t).unwrap();
    assert_eq!(lp.rms_error, Some(m.rms_error));
    assert_eq!(lp.peak_error, Some(m.peak_error));
    assert_eq!(lp.settling_time, m.settling_time.is_finite().then_some(m.settling_time));
    let k0 = window_start(t, lp.from_t);
    let shifted: Vec<f64> = t[k0..].iter().map(|s| s - t[k0]).collect();
    let err = &traces.channel("err:v_out").unwrap()[k0..];
    assert_eq!(lp.itae, Some(itae(&shifted, err).unwrap()));

    assert_eq!(report.events.len(), 1);
    assert!(report.events[0].fired);
    assert_eq!(report.events[0].snapped, 0.02);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["single_load", "grid_disconnect", "power_control", "parallel_inverters"] {
        for out in ["a", "b"] {
            let (code, _, stderr) = run_in(dir.path(), &["run", name, "--out", out]);
            assert_eq!(code, EXIT_OK, "{stderr}");
        }
        let a = fs::read(dir.path().join(format!("a/{name}.csv"))).unwrap();
        let b = fs::read(dir.path().join(format!("b/{name}.csv"))).unwrap();
        assert!(a == b, "{name}");
    }
}

#[test]
fn unknown_scenario_lists_available() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["run", "nonexistent"]);
    assert_eq!(code, EXIT_USER_ERROR);
    assert!(stderr.contains("single_load") && stderr.contains("parallel_inverters"), "{stderr}");
}

#[test]
fn huge_gain_on_clamped_duty_cycle_is_reported_not_crashed() {
    // The duty-cycle is clamped to [-1, 1] and the filter is passive, so the
    // states stay bounded; the run completes and the report shows the damage.
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) =
        run_in(dir.path(), &["run", "single_load", "--set", "loops.0.gains.kp=1e9", "--out", "."]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert!(stdout.contains("rms="));
    let report: RunReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("single_load.report.json")).unwrap()).unwrap();
    assert!(report.loops[0].rms_error.unwrap() > 100.0);
}

const UNSTABLE: &str = r#"
name = "unstable"

[sim]
t_end = 1.0
tc = 1e-3
substeps = 4
record_decimation = 1

[plant]
kind = "first_order"
tau = 0.01
gain = -1.0

[[loops]]
name = "y"
controller = "pi"
alpha = 1.0
gains = { kp = 1e3, ki = 0.0 }
limits = { u_min = -1e300, u_max = 1e300 }
measurement = { kind = "signal", name = "y" }
reference = { kind = "constant", value = 1.0 }
actuation = { kind = "direct", slot = "u" }
"#;

#[test]
fn divergence_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("unstable.toml"), UNSTABLE).unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["run", "unstable.toml"]);
    assert_eq!(code, EXIT_DIVERGED, "{stderr}");
    assert!(stderr.contains("diverge"), "{stderr}");
}

#[test]
fn config_file_round_trip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.toml");
    let mut s = scenario_single_load();
    s.name = "custom".into();
    s.sim.t_end = 0.01;
    fs::write(&path, s.to_toml().unwrap()).unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["run", "custom.toml", "--out", "."]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    let traces = read_trace(&dir.path().join("custom.csv")).unwrap();
    assert_eq!(traces.len(), 101);
    assert_eq!(traces, s.run().unwrap().traces);
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "name = \"x\"\n[sim]\nt_end = \"soon\"\n").unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["run", "bad.toml"]);
    assert_eq!(code, EXIT_USER_ERROR);
    assert!(stderr.contains("line"), "{stderr}");
}

#[test]
fn unknown_override_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["run", "single_load", "--set", "loops.0.gains.kz=1", "--out", "o"]);
    assert_eq!(code, EXIT_USER_ERROR);
    assert!(stderr.contains("loops.0.gains.kz"), "{stderr}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn t_end_and_substeps_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["run", "power_control", "--t-end", "0.005", "--substeps", "5", "--out", "."],
    );
    assert_eq!(code, EXIT_OK, "{stderr}");
    let traces = read_trace(&dir.path().join("power_control.csv")).unwrap();
    assert_eq!(traces.len(), 51);
    let mut s = builtin("power_control").unwrap();
    s.sim.t_end = 0.005;
    s.sim.substeps = 5;
    assert_eq!(traces, s.run().unwrap().traces);
}

#[test]
fn list_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run_in(dir.path(), &["list"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(stdout.lines().count(), 9);
    let (code, stdout, _) = run_in(dir.path(), &["export-schema"]);
    assert_eq!(code, EXIT_OK);
    let schema: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(schema["title"], "Scenario");
}

#[test]
fn compare_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run_in(dir.path(), &["compare", "single_load", "--t-end", "0.025", "--out", "."]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["ipi"]["itae"].is_number());
    assert!(v["pi"]["itae"].is_number());
    assert!(dir.path().join("single_load.compare.json").is_file());
    let (code, _, _) = run_in(dir.path(), &["compare", "parallel_inverters"]);
    assert_eq!(code, EXIT_USER_ERROR);
}

#[test]
fn empty_trace_set_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    write_trace(&TraceSet::new(vec![]), &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "t\n");
}

#[test]
fn every_builtin_trace_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for name in microgrid_mfc::scenarios::BUILTIN_NAMES {
        let s: Scenario = builtin(name).unwrap();
        let traces = s.run().unwrap().traces;
        let path = dir.path().join(format!("{name}.csv"));
        write_trace(&traces, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back.names(), traces.names());
        for ((_, a), (_, b)) in back.channels().zip(traces.channels()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()), "{name}");
        }
    }
}
