//! Reproducible scenario definitions and their TOML config representation.

mod builtin;
mod compare;

use serde::{Deserialize, Serialize};

use crate::engine::{self, ControlLoop, Measurement, OpenLoopInput, RunOptions, RunOutput, SimConfig};
use crate::error::{Error, Result};
use crate::plants::{Event, Plant};

pub use builtin::*;
pub use compare::{compare_pi_ipi, default_pi_grid, loop_metrics, ComparisonReport, ControllerMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MetricRequest {
    /// settling band as a fraction of the reference amplitude
    pub band: f64,
    /// start of the evaluation window (s); defaults to the first event time
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_t: Option<f64>,
}

impl Default for MetricRequest {
    fn default() -> Self {
        Self { band: 0.05, from_t: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Scenario {
    pub name: String,
    pub sim: SimConfig,
    #[serde(default)]
    pub metrics: MetricRequest,
    pub plant: Plant,
    #[serde(default)]
    pub loops: Vec<ControlLoop>,
    #[serde(default)]
    pub open_loop: Vec<OpenLoopInput>,
    #[serde(default)]
    pub events: Vec<Event>,
}

impl Scenario {
    pub fn run(&self) -> Result<RunOutput> {
        self.run_with(&RunOptions::default())
    }

    pub fn run_with(&self, options: &RunOptions) -> Result<RunOutput> {
        engine::run_with(&self.plant, &self.loops, &self.open_loop, &self.events, &self.sim, options)
    }

    /// Checks everything a run would check, without simulating.
    pub fn validate(&self) -> Result<()> {
        let probe = Self {
            sim: SimConfig { t_end: 0.0, ..self.sim },
            ..self.clone()
        };
        probe.run().map(|_| ())
    }

    pub fn first_event_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.time)
    }

    /// Start of the metric window: explicit request, else first event, else 0.
    pub fn metric_start(&self) -> f64 {
        self.metrics
            .from_t
            .or_else(|| self.first_event_time())
            .unwrap_or(0.0)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    /// Applies `path = value` overrides, where `path` is dotted (array
    /// elements by index, e.g. `loops.0.gains.kp`) and `value` is a TOML
    /// literal. Paths must already exist in the scenario.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[(S, S)]) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (path, raw) in overrides {
            set_path(&mut root, path.as_ref(), raw.as_ref())?;
        }
        let out: Scenario = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim_end().to_string()))?;
        Ok(out)
    }
}

/// Parses `key=value` into its parts.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{arg}` is not of the form key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("override `{arg}` has an empty key")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

fn set_path(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let missing = || Error::Config(format!("no such field `{path}`"));
    let mut node = root;
    for segment in path.split('.') {
        node = match node {
            toml::Value::Table(t) => t.get_mut(segment).ok_or_else(missing)?,
            toml::Value::Array(a) => {
                let idx: usize = segment.parse().map_err(|_| missing())?;
                a.get_mut(idx).ok_or_else(missing)?
            }
            _ => return Err(missing()),
        };
    }
    let parsed = parse_literal(raw);
    *node = match (&*node, parsed) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (toml::Value::Table(_) | toml::Value::Array(_), toml::Value::String(_)) => {
            return Err(Error::Config(format!("`{path}` is a table; set one of its fields instead")))
        }
        (_, v) => v,
    };
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// JSON schema of the scenario config format.
pub fn config_schema() -> String {
    let schema = schemars::schema_for!(Scenario);
    serde_json::to_string_pretty(&schema).expect("schema serializes")
}

/// Trace channel carrying the measured value of `lp`.
pub fn measurement_channel(lp: &ControlLoop) -> String {
    match &lp.measurement {
        Measurement::Signal { name } => name.clone(),
        Measurement::ActivePower { .. } => format!("meas:{}", lp.name),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_is_identity() {
        for name in BUILTIN_NAMES {
            let s = builtin(name).unwrap();
            let text = s.to_toml().unwrap();
            let back = Scenario::from_toml(&text).unwrap();
            assert_eq!(back, s, "{name}:\n{text}");
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn overrides() {
        let s = scenario_single_load();
        let o = s
            .with_overrides(&[("loops.0.gains.kp", "1e9"), ("sim.t_end", "0.01"), ("sim.substeps", "5")])
            .unwrap();
        assert_eq!(o.loops[0].gains.kp, 1e9);
        assert_eq!(o.sim.t_end, 0.01);
        assert_eq!(o.sim.substeps, 5);
        // integers coerce into float fields
        let o = s.with_overrides(&[("loops.0.alpha", "31")]).unwrap();
        assert_eq!(o.loops[0].alpha, 31.0);
    }

    #[test]
    fn override_unknown_path_rejected() {
        let s = scenario_single_load();
        for path in ["loops.0.gains.kq", "loops.3.gains.kp", "nope", "sim.tc.x"] {
            let err = s.with_overrides(&[(path, "1")]).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{path}: {err}");
        }
        assert!(s.with_overrides(&[("sim.substeps", "\"ten\"")]).is_err());
    }

    #[test]
    fn parse_override_forms() {
        assert_eq!(parse_override("a.b=3").unwrap(), ("a.b".into(), "3".into()));
        assert!(parse_override("a.b").is_err());
        assert!(parse_override("=3").is_err());
    }

    #[test]
    fn malformed_config_reports_location() {
        let err = Scenario::from_toml("name = \"x\"\nsim = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn schema_mentions_top_level_fields() {
        let schema = config_schema();
        for field in ["plant", "loops", "events", "sim", "open_loop"] {
            assert!(schema.contains(field), "{field}");
        }
    }
}
