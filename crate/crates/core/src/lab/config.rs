//! Run configuration, read from a TOML file of `[section]` tables with flat
//! `key = value` entries.
//!
//! ```toml
//! [run]
//! scenario = "cosh-neck"
//! op = "all"
//! rng_seed = 0
//!
//! [barrier]
//! epsilon1 = 0.5
//! ```
//!
//! Only `run.scenario` is required; unknown sections and keys are rejected.
//! `configs/annotated.toml` in the repository lists every key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::stability::DEFAULT_MARGIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    CertifyStability,
    CertifyBarrier,
    Flow,
    Uniqueness,
    All,
}

impl Operation {
    pub fn label(self) -> &'static str {
        match self {
            Operation::CertifyStability => "certify-stability",
            Operation::CertifyBarrier => "certify-barrier",
            Operation::Flow => "flow",
            Operation::Uniqueness => "uniqueness",
            Operation::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub operation: Operation,
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    pub margin: f64,
    /// Tube radius; `None` takes the scenario default.
    pub epsilon1: Option<f64>,
    pub barrier_safety: f64,
    /// Initial perturbation amplitude; `None` takes the scenario default.
    pub amplitude: Option<f64>,
    pub flow: FlowParams,
    pub seeds: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    run: RunSection,
    #[serde(default)]
    stability: StabilitySection,
    #[serde(default)]
    barrier: BarrierSection,
    #[serde(default)]
    flow: FlowSection,
    #[serde(default)]
    uniqueness: UniquenessSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    scenario: String,
    op: Option<Operation>,
    rng_seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilitySection {
    margin: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BarrierSection {
    epsilon1: Option<f64>,
    safety: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowSection {
    amplitude: Option<f64>,
    dt_safety: Option<f64>,
    t_end: Option<f64>,
    resample_every: Option<usize>,
    hausdorff_tol: Option<f64>,
    mean_h_tol: Option<f64>,
    converge_records: Option<usize>,
    record_every: Option<usize>,
    snapshot_every: Option<usize>,
    max_steps: Option<usize>,
    extinction_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UniquenessSection {
    seeds: Option<usize>,
}

impl From<FileConfig> for RunConfig {
    fn from(f: FileConfig) -> Self {
        let mut c = RunConfig::new(&f.run.scenario);
        c.operation = f.run.op.unwrap_or(c.operation);
        c.rng_seed = f.run.rng_seed.unwrap_or(c.rng_seed);
        c.out_dir = f.run.out.unwrap_or(c.out_dir);
        c.margin = f.stability.margin.unwrap_or(c.margin);
        c.epsilon1 = f.barrier.epsilon1;
        c.barrier_safety = f.barrier.safety.unwrap_or(c.barrier_safety);
        c.amplitude = f.flow.amplitude;
        c.seeds = f.uniqueness.seeds.unwrap_or(c.seeds);
        let (p, s) = (&mut c.flow, f.flow);
        p.dt_safety = s.dt_safety.unwrap_or(p.dt_safety);
        p.t_end = s.t_end.unwrap_or(p.t_end);
        p.resample_every = s.resample_every.unwrap_or(p.resample_every);
        p.hausdorff_tol = s.hausdorff_tol.unwrap_or(p.hausdorff_tol);
        p.mean_h_tol = s.mean_h_tol.unwrap_or(p.mean_h_tol);
        p.converge_records = s.converge_records.unwrap_or(p.converge_records);
        p.record_every = s.record_every.unwrap_or(p.record_every);
        p.snapshot_every = s.snapshot_every.unwrap_or(p.snapshot_every);
        p.max_steps = s.max_steps.unwrap_or(p.max_steps);
        p.extinction_fraction = s.extinction_fraction.unwrap_or(p.extinction_fraction);
        c
    }
}

impl RunConfig {
    pub fn new(scenario: &str) -> Self {
        RunConfig {
            scenario: scenario.to_string(),
            operation: Operation::All,
            rng_seed: 0,
            out_dir: PathBuf::from("runs"),
            margin: DEFAULT_MARGIN,
            epsilon1: None,
            barrier_safety: crate::barrier::DEFAULT_SAFETY,
            amplitude: None,
            flow: FlowParams::default(),
            seeds: 20,
        }
    }

    /// Range checks on every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_empty() {
            return Err(Error::validation("run.scenario", "must be set"));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::validation("stability.margin", "must be finite and non-negative"));
        }
        if let Some(e) = self.epsilon1 {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::validation("barrier.epsilon1", "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.barrier_safety) {
            return Err(Error::validation("barrier.safety", "must lie in [0, 1)"));
        }
        if let Some(a) = self.amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::validation("flow.amplitude", "must be finite and non-negative"));
            }
        }
        if self.seeds == 0 {
            return Err(Error::validation("uniqueness.seeds", "must be positive"));
        }
        self.flow.validate().map_err(|e| match e {
            Error::Validation { field, message } => Error::Validation {
                field: format!("flow.{field}"),
                message,
            },
            other => other,
        })
    }
}

/// Splits `section.key=value` and reads the value as a TOML scalar, falling
/// back to a bare string (so `run.scenario=cosh-neck` needs no quotes).
/// Line 0 in errors marks command-line input.
pub fn parse_override(text: &str) -> Result<(String, String, toml::Value)> {
    let err = |m: &str| Error::Parse {
        line: 0,
        message: format!("override {text:?}: {m}"),
    };
    let (path, value) = text.split_once('=').ok_or_else(|| err("expected section.key=value"))?;
    let (section, key) = path.trim().split_once('.').ok_or_else(|| err("key must be qualified as section.key"))?;
    let ident = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ident(section) || !ident(key) {
        return Err(err("key must be qualified as section.key"));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .filter(|v| !matches!(v, toml::Value::Table(_) | toml::Value::Array(_)))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((section.to_string(), key.to_string(), parsed))
}

fn line_of(text: &str, err: &toml::de::Error) -> usize {
    err.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

/// Parses a config text, applies `section.key=value` overrides on top, and validates.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        line: line_of(text, &e),
        message: e.message().to_string(),
    })?;
    if overrides.is_empty() {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: line_of(text, &e),
            message: e.message().to_string(),
        })?;
        let cfg = RunConfig::from(file);
        cfg.validate()?;
        return Ok(cfg);
    }
    for o in overrides {
        let (section, key, value) = parse_override(o)?;
        let entry = table
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(t) = entry else {
            return Err(Error::Parse {
                line: 0,
                message: format!("override {o:?}: {section} is not a section"),
            });
        };
        t.insert(key, value);
    }
    let file = FileConfig::deserialize(toml::Value::Table(table)).map_err(|e| Error::Parse {
        line: 0,
        message: e.message().to_string(),
    })?;
    let cfg = RunConfig::from(file);
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
