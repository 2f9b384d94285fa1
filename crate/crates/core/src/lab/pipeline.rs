use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Operation, RunConfig};
use super::scenario::{find, ClaimKind, Expect, FlowMode, Geometry, Provenance, Scenario, Settings, Stage};
use crate::barrier::{certify_barrier_with, default_psi_floor, BarrierCertificate, BarrierOptions, GridDensity, TubularRegion};
use crate::error::{Error, Result};
use crate::flow::{
    barrier_monotone_check, dissipation_check, mass_checks, run, trapping_check, uniqueness_search, FlowTarget,
};
use crate::io::write_immersion_csv;
use crate::stability::{certify_strong_stability, StabilityCertificate};

/// Slack of the trapping check used in reports.
pub const TRAPPING_SLACK: f64 = 0.05;
/// Tolerance on increments of the barrier monotone.
pub const MONOTONE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Measured {
    Number(f64),
    Text(String),
}

impl Measured {
    fn describe(&self) -> String {
        match self {
            Measured::Number(v) => format!("{v:.6e}"),
            Measured::Text(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub stage: Stage,
    pub quantity: String,
    pub kind: ClaimKind,
    pub provenance: Provenance,
    pub expected: Expect,
    pub measured: Option<Measured>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub operation: Operation,
    pub rng_seed: u64,
    pub epsilon1: f64,
    pub stages: Vec<Stage>,
    pub checks: Vec<Check>,
    /// Stage failures, as `(stage, message)`.
    pub errors: Vec<(String, String)>,
    pub passed: bool,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(out, "operation: {}", self.operation.label());
        let _ = writeln!(out, "rng_seed: {}", self.rng_seed);
        let _ = writeln!(out, "epsilon1: {}", self.epsilon1);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} [{}] {}.{} = {} expected {} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.kind.label(),
                stage_name(c.stage),
                c.quantity,
                c.measured.as_ref().map_or("missing".to_string(), Measured::describe),
                c.expected.describe(),
                c.provenance.label(),
            );
        }
        for (stage, msg) in &self.errors {
            let _ = writeln!(out, "ERROR {stage}: {msg}");
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(
            out,
            "overall: {} ({passed}/{} checks, {} errors)",
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.errors.len()
        );
        out
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub dir: PathBuf,
    pub report: Report,
    pub summary: Value,
    /// Files written, relative to `dir`, in write order.
    pub files: Vec<String>,
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::Stability => "stability",
        Stage::Barrier => "barrier",
        Stage::Flow => "flow",
        Stage::Uniqueness => "uniqueness",
    }
}

/// Per-run output directory: `<out>/<scenario>/<op>-seed<seed>`.
pub fn run_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir
        .join(&cfg.scenario)
        .join(format!("{}-seed{}", cfg.operation.label(), cfg.rng_seed))
}

/// Stages an operation runs for a scenario, in pipeline order.
pub fn stages_for(scenario: &Scenario, op: Operation) -> Vec<Stage> {
    [Stage::Stability, Stage::Barrier, Stage::Flow, Stage::Uniqueness]
        .into_iter()
        .filter(|s| scenario.operations.contains(&s.operation()) && (op == Operation::All || op == s.operation()))
        .collect()
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    scenario: &'a Scenario,
    geom: &'a Geometry,
    eps: f64,
    dir: PathBuf,
    header: String,
    measured: BTreeMap<(Stage, &'static str), Measured>,
    summary: serde_json::Map<String, Value>,
    files: Vec<String>,
    barrier: Option<(TubularRegion, BarrierCertificate)>,
}

impl Ctx<'_> {
    fn put(&mut self, stage: Stage, key: &'static str, v: f64) {
        self.measured.insert((stage, key), Measured::Number(v));
    }

    fn put_text(&mut self, stage: Stage, key: &'static str, v: &str) {
        self.measured.insert((stage, key), Measured::Text(v.to_string()));
    }

    /// Writes a CSV file with a leading provenance comment line.
    fn write_csv(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, format!("{}{body}", self.header))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn region(&self) -> Result<TubularRegion> {
        let model = self.geom.model.clone().ok_or_else(|| {
            Error::validation("op", format!("{} has no distance model for a tubular region", self.scenario.name))
        })?;
        TubularRegion::new(self.geom.sigma.clone(), self.eps, model, GridDensity::default())
    }

    fn certify(&self) -> Result<(TubularRegion, BarrierCertificate)> {
        let region = self.region()?;
        let opts = BarrierOptions {
            safety: self.cfg.barrier_safety,
            ..Default::default()
        };
        let n = region.n();
        let cert = certify_barrier_with(&region, n, default_psi_floor(self.eps), &opts)?.with_scenario(self.scenario.name);
        Ok((region, cert))
    }

    /// Region and certificate the flow stages run against, if any.
    fn flow_target(&mut self) -> Result<Option<(TubularRegion, BarrierCertificate)>> {
        match self.scenario.flow_mode {
            FlowMode::Free => Ok(None),
            FlowMode::Forced { c1 } => {
                let region = self.region()?;
                let cert = BarrierCertificate::forced(self.eps, c1, region.n()).with_scenario(self.scenario.name);
                Ok(Some((region, cert)))
            }
            FlowMode::Certified => {
                if self.barrier.is_none() {
                    let pair = self.certify()?;
                    self.summary.insert("flow_certificate".into(), serde_json::to_value(&pair.1)?);
                    self.barrier = Some(pair);
                }
                Ok(self.barrier.clone())
            }
        }
    }

    fn stability(&mut self) -> Result<()> {
        let patches: Vec<_> = std::iter::once(&self.geom.sigma).chain(&self.geom.extra_patches).collect();
        let parts = patches
            .into_iter()
            .map(|imm| certify_strong_stability(imm, self.cfg.margin))
            .collect::<Result<Vec<_>>>()?;
        let cert = if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            StabilityCertificate::merge(parts)?
        }
        .with_scenario(self.scenario.name);
        self.put(Stage::Stability, "c0", cert.c0);
        self.put_text(Stage::Stability, "verdict", verdict_label(&cert)?.as_str());
        if let Some(reference) = self.geom.reference_eigenvalue {
            let dev = cert
                .samples
                .iter()
                .flat_map(|s| s.eigenvalues.iter().map(move |e| (e - reference).abs()))
                .fold(0.0, f64::max);
            self.put(Stage::Stability, "max_table_deviation", dev);
        }
        let mut csv = String::from("patch,index");
        let dim = self.geom.chart.dim();
        let m = cert.samples.first().map_or(0, |s| s.eigenvalues.len());
        for a in 0..dim {
            let _ = write!(csv, ",x{a}");
        }
        for a in 0..m {
            let _ = write!(csv, ",eig{a}");
        }
        csv.push('\n');
        for s in &cert.samples {
            let _ = write!(csv, "{},{}", s.patch, s.index);
            for v in s.point.iter().chain(&s.eigenvalues) {
                let _ = write!(csv, ",{v:.12e}");
            }
            csv.push('\n');
        }
        self.write_csv("stability.csv", &csv)?;
        self.summary.insert(
            "stability".into(),
            json!({
                "margin": cert.margin,
                "c0": cert.c0,
                "verdict": cert.verdict,
                "samples": cert.samples.len(),
                "patches": 1 + self.geom.extra_patches.len(),
                "symmetry_residual": cert.symmetry_residual(),
            }),
        );
        Ok(())
    }

    fn barrier(&mut self) -> Result<()> {
        let (region, cert) = self.certify()?;
        self.put(Stage::Barrier, "c1_raw", cert.c1_raw);
        self.put(Stage::Barrier, "c1", cert.c1);
        self.put_text(Stage::Barrier, "verdict", if cert.passes() { "pass" } else { "fail" });
        self.write_csv("barrier_evidence.csv", &cert.evidence_csv())?;
        self.summary.insert("barrier".into(), serde_json::to_value(&cert)?);
        self.barrier = Some((region, cert));
        Ok(())
    }

    fn flow(&mut self) -> Result<()> {
        let amplitude = self.cfg.amplitude.unwrap_or(self.scenario.default_amplitude);
        let imm0 = self.scenario.initial(self.geom, amplitude)?;
        let target = self.flow_target()?;
        let trace = run(
            &imm0,
            target.as_ref().map(|(region, cert)| FlowTarget { region, cert }),
            &self.cfg.flow,
        )?;
        let last = trace.last().clone();
        self.put_text(Stage::Flow, "outcome", trace.outcome.label());
        if let Some(t) = trace.extinction_time {
            self.put(Stage::Flow, "extinction_time", t);
        }
        self.put(Stage::Flow, "dissipation_residual", dissipation_check(&trace));
        let mut flow = json!({
            "amplitude": amplitude,
            "outcome": trace.outcome,
            "steps": trace.steps,
            "extinction_time": trace.extinction_time,
            "final": last,
            "diagnostic": trace.diagnostic,
            "dissipation_residual": dissipation_check(&trace),
        });
        if let Some((_, cert)) = &target {
            let trap = trapping_check(&trace, cert, TRAPPING_SLACK);
            let mono = barrier_monotone_check(&trace, cert, MONOTONE_TOLERANCE);
            self.put(Stage::Flow, "hausdorff", last.hausdorff);
            self.put(Stage::Flow, "sup_h", last.sup_h);
            self.put(Stage::Flow, "mass_ratio", last.mass_ratio);
            self.put(Stage::Flow, "trapping_violations", trap.violations as f64);
            self.put(Stage::Flow, "fitted_rate", trap.fitted_rate.unwrap_or(f64::NAN));
            self.put(Stage::Flow, "monotone_increment", mono.max_increment);
            flow["certificate_forced"] = json!(cert.forced);
            flow["c1"] = json!(cert.c1);
            flow["trapping"] = serde_json::to_value(&trap)?;
            flow["monotone"] = serde_json::to_value(&mono)?;
            flow["mass"] = serde_json::to_value(mass_checks(&trace))?;
        }
        self.write_csv("flow_trace.csv", &trace.to_csv())?;
        for snap in &trace.snapshots {
            self.write_csv(&format!("snapshots/step_{:07}.csv", snap.step), &write_immersion_csv(&snap.immersion))?;
        }
        self.summary.insert("flow".into(), flow);
        Ok(())
    }

    fn uniqueness(&mut self) -> Result<()> {
        let (region, cert) = self
            .flow_target()?
            .ok_or_else(|| Error::validation("op", "uniqueness needs a target submanifold"))?;
        let (scenario, geom, eps) = (self.scenario, self.geom, self.eps);
        let perturb = |rng: &mut rand_chacha::ChaCha8Rng| scenario.perturbation(geom, eps, rng);
        let report = uniqueness_search(
            FlowTarget {
                region: &region,
                cert: &cert,
            },
            &perturb,
            self.cfg.seeds,
            self.cfg.rng_seed,
            &self.cfg.flow,
        )?;
        self.put(Stage::Uniqueness, "converged_to_sigma", report.converged_to_sigma as f64);
        self.put(Stage::Uniqueness, "not_converged", (report.seeds - report.converged_to_sigma) as f64);
        self.put(Stage::Uniqueness, "stabilized_elsewhere", report.stabilized_elsewhere.len() as f64);
        let mut csv = String::from("seed,outcome,final_hausdorff,final_sup_h,trapping_violations,error\n");
        for r in &report.results {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.seed,
                r.outcome.map_or("error", |o| o.label()),
                crate::flow::fmt(r.final_hausdorff),
                crate::flow::fmt(r.final_sup_h),
                r.trapping_violations,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        self.write_csv("uniqueness.csv", &csv)?;
        let mut v = serde_json::to_value(&report)?;
        v["certificate_forced"] = json!(cert.forced);
        self.summary.insert("uniqueness".into(), v);
        Ok(())
    }
}

fn verdict_label(cert: &StabilityCertificate) -> Result<String> {
    Ok(serde_json::to_value(cert.verdict)?.as_str().unwrap_or_default().to_string())
}

fn evaluate(expect: &Expect, m: &Measured) -> bool {
    match (expect, m) {
        (Expect::Near { value, tol }, Measured::Number(x)) => (x - value).abs() <= *tol,
        (Expect::NearRel { value, rel }, Measured::Number(x)) => (x - value).abs() <= rel * value.abs(),
        (Expect::AtLeast { value }, Measured::Number(x)) => x >= value,
        (Expect::Below { value }, Measured::Number(x)) => x < value,
        (Expect::Is { value }, Measured::Text(t)) => t == value,
        (Expect::IsNot { value }, Measured::Text(t)) => t != value,
        _ => false,
    }
}

fn write_file(dir: &Path, name: &str, body: &str, files: &mut Vec<String>) -> Result<()> {
    std::fs::write(dir.join(name), body)?;
    files.push(name.to_string());
    Ok(())
}

/// Runs certify → flow → monitors for one config and writes all outputs to
/// [`run_dir`]. Stage errors are recorded as failures in the report.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineResult> {
    cfg.validate()?;
    let scenario = find(&cfg.scenario)?;
    if !scenario.supports(cfg.operation) {
        return Err(Error::validation(
            "run.op",
            format!("{} does not support {}", scenario.name, cfg.operation.label()),
        ));
    }
    let eps = cfg.epsilon1.unwrap_or(scenario.default_epsilon1);
    let stages = stages_for(&scenario, cfg.operation);
    let dir = run_dir(cfg);
    std::fs::create_dir_all(&dir)?;

    let mut errors = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut measured = BTreeMap::new();
    let mut files = Vec::new();
    match scenario.geometry() {
        Ok(geom) => {
            let mut ctx = Ctx {
                cfg,
                scenario: &scenario,
                geom: &geom,
                eps,
                dir: dir.clone(),
                header: format!("# scenario={} rng_seed={}\n", scenario.name, cfg.rng_seed),
                measured: BTreeMap::new(),
                summary: serde_json::Map::new(),
                files: Vec::new(),
                barrier: None,
            };
            for &stage in &stages {
                let r = match stage {
                    Stage::Stability => ctx.stability(),
                    Stage::Barrier => ctx.barrier(),
                    Stage::Flow => ctx.flow(),
                    Stage::Uniqueness => ctx.uniqueness(),
                };
                if let Err(e) = r {
                    errors.push((stage_name(stage).to_string(), e.to_string()));
                }
            }
            summary = ctx.summary;
            measured = ctx.measured;
            files = ctx.files;
        }
        Err(e) => errors.push(("setup".to_string(), e.to_string())),
    }

    let settings = Settings {
        epsilon1: eps,
        seeds: cfg.seeds,
    };
    let checks: Vec<Check> = scenario
        .expectations(&settings)
        .into_iter()
        .filter(|e| stages.contains(&e.stage))
        .map(|e| {
            let m = measured.get(&(e.stage, e.quantity)).cloned();
            let pass = m.as_ref().is_some_and(|m| evaluate(&e.expect, m));
            Check {
                stage: e.stage,
                quantity: e.quantity.to_string(),
                kind: e.kind,
                provenance: e.provenance,
                expected: e.expect,
                measured: m,
                pass,
            }
        })
        .collect();
    let passed = errors.is_empty() && checks.iter().all(|c| c.pass);
    let report = Report {
        scenario: scenario.name.to_string(),
        operation: cfg.operation,
        rng_seed: cfg.rng_seed,
        epsilon1: eps,
        stages,
        checks,
        errors,
        passed,
    };

    let mut root = serde_json::Map::new();
    root.insert("config".into(), serde_json::to_value(cfg)?);
    root.insert("report".into(), serde_json::to_value(&report)?);
    root.extend(summary);
    let summary = Value::Object(root);
    write_file(&dir, "summary.json", &serde_json::to_string_pretty(&summary)?, &mut files)?;
    write_file(&dir, "report.txt", &report.to_text(), &mut files)?;
    Ok(PipelineResult {
        dir,
        report,
        summary,
        files,
    })
}
