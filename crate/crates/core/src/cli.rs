//! Command-line front end and trace file I/O.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::engine::{EventRecord, TraceSet};
use crate::error::{Error, Result};
use crate::scenarios::{
    builtin, compare_pi_ipi, default_pi_grid, loop_metrics, parse_override, Scenario, BUILTIN_NAMES,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER_ERROR: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "microgrid-mfc", version, about = "Model-free control of inverter microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the built-in scenario names
    List,
    /// Simulate a scenario and write its trace and report
    Run {
        #[command(flatten)]
        target: Target,
        /// Directory for the trace and report files
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Tune a PI baseline and compare it against the i-PI
    Compare {
        #[command(flatten)]
        target: Target,
        /// Also write the JSON report into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON schema of scenario config files
    ExportSchema,
}

#[derive(Debug, Args)]
struct Target {
    /// Built-in scenario name or path to a TOML config
    scenario: String,
    /// Override the simulated horizon (s)
    #[arg(long)]
    t_end: Option<f64>,
    /// Override the integration substeps per control period
    #[arg(long)]
    substeps: Option<u32>,
    /// Dotted-path override, e.g. loops.0.gains.kp=50 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Target {
    fn resolve(&self) -> Result<Scenario> {
        let mut scenario = load_scenario(&self.scenario)?;
        let mut overrides = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        if let Some(t) = self.t_end {
            overrides.push(("sim.t_end".into(), format!("{t:?}")));
        }
        if let Some(n) = self.substeps {
            overrides.push(("sim.substeps".into(), n.to_string()));
        }
        if !overrides.is_empty() {
            scenario = scenario.with_overrides(&overrides)?;
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Built-in name, or a config file if `arg` names an existing path.
pub fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        return Scenario::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        });
    }
    if arg.ends_with(".toml") {
        return Err(Error::Io {
            path: arg.to_string(),
            message: "no such file".into(),
        });
    }
    builtin(arg)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub name: String,
    /// start of the metric window (s)
    pub from_t: f64,
    pub itae: Option<f64>,
    pub rms_error: Option<f64>,
    pub peak_error: Option<f64>,
    pub settling_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub loops: Vec<LoopReport>,
    pub events: Vec<EventRecord>,
    pub wall_clock_s: f64,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
}

/// Runs `scenario`, writing `<name>.csv` and `<name>.report.json` into `out`.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> Result<RunReport> {
    let started = Instant::now();
    let output = scenario.run()?;
    let wall_clock_s = started.elapsed().as_secs_f64();

    let from_t = scenario.metric_start();
    let loops = (0..scenario.loops.len())
        .map(|i| {
            let m = loop_metrics(scenario, &output, i, from_t).ok();
            LoopReport {
                name: scenario.loops[i].name.clone(),
                from_t,
                itae: m.map(|m| m.itae),
                rms_error: m.map(|m| m.rms_error),
                peak_error: m.map(|m| m.peak_error),
                settling_time: m.and_then(|m| m.settling_time),
            }
        })
        .collect();

    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let trace_path = out.join(format!("{}.csv", scenario.name));
    let report_path = out.join(format!("{}.report.json", scenario.name));
    write_trace(&output.traces, &trace_path)?;
    let report = RunReport {
        scenario: scenario.name.clone(),
        loops,
        events: output.events,
        wall_clock_s,
        trace_path,
        report_path,
    };
    write_json(&report, &report.report_path)?;
    Ok(report)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

/// CSV with header `t,<channels...>`; values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_trace(traces: &TraceSet, path: &Path) -> Result<()> {
    let mut text = String::from("t");
    for name in traces.names() {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    let columns: Vec<&[f64]> = traces.channels().map(|(_, c)| c).collect();
    for (k, t) in traces.time().iter().enumerate() {
        let _ = write!(text, "{t}");
        for c in &columns {
            let _ = write!(text, ",{}", c[k]);
        }
        text.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
}

pub fn read_trace(path: &Path) -> Result<TraceSet> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let bad = |line: usize, what: &str| Error::Io {
        path: path.display().to_string(),
        message: format!("line {line}: {what}"),
    };
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad(1, "missing header"))?.split(',').collect();
    if header.first() != Some(&"t") {
        return Err(bad(1, "first column must be `t`"));
    }
    let mut time = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(bad(i + 2, "wrong number of fields"));
        }
        let mut values = fields.iter().map(|f| f.parse::<f64>());
        time.push(values.next().unwrap().map_err(|_| bad(i + 2, "bad number"))?);
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v.map_err(|_| bad(i + 2, "bad number"))?);
        }
    }
    let named = header[1..].iter().map(|s| s.to_string()).zip(columns).collect();
    Ok(TraceSet::from_columns(time, named).expect("columns share the time grid"))
}

/// Parses `argv` (program name first), executes and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Diverged { .. } => EXIT_DIVERGED,
                _ => EXIT_USER_ERROR,
            }
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::List => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
        }
        Command::Run { target, out } => {
            let scenario = target.resolve()?;
            let report = run_scenario(&scenario, &out)?;
            for l in &report.loops {
                println!(
                    "{}: itae={} rms={} peak={} settling={}",
                    l.name,
                    fmt_opt(l.itae),
                    fmt_opt(l.rms_error),
                    fmt_opt(l.peak_error),
                    fmt_opt(l.settling_time)
                );
            }
            println!("trace: {}", report.trace_path.display());
            println!("report: {}", report.report_path.display());
        }
        Command::Compare { target, out } => {
            let scenario = target.resolve()?;
            let report = compare_pi_ipi(&scenario, &default_pi_grid())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
                write_json(&report, &dir.join(format!("{}.compare.json", scenario.name)))?;
            }
        }
        Command::ExportSchema => println!("{}", crate::scenarios::config_schema()),
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.6e}"))
}
