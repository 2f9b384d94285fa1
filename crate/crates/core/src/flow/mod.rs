//! Explicit parametric mean curvature flow with runtime monitors.

mod monitors;

use std::fmt::Write as _;

use serde::Serialize;

use crate::ambient::Point;
use crate::barrier::{psi_at, BarrierCertificate, TubularRegion};
use crate::error::{Error, Result};
use crate::submanifold::{resample, volume, volume_weights, DiscreteImmersion, FrameField, Shape};

pub use monitors::{
    barrier_monotone_check, dissipation_check, mass_checks, trapping_check, uniqueness_search, MassReport, MonotoneReport,
    SeedResult, TrappingReport, UniquenessReport, UNIQUENESS_HAUSDORFF,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowParams {
    pub dt_safety: f64,
    pub t_end: f64,
    pub resample_every: usize,
    pub hausdorff_tol: f64,
    pub mean_h_tol: f64,
    /// Consecutive records that must satisfy both tolerances.
    pub converge_records: usize,
    pub record_every: usize,
    /// Records between stored snapshots (the first and last state are always kept).
    pub snapshot_every: usize,
    pub max_steps: usize,
    /// Volume fraction of the initial state below which the flow counts as extinct.
    pub extinction_fraction: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt_safety: 0.2,
            t_end: 20.0,
            resample_every: 10,
            hausdorff_tol: 1e-3,
            mean_h_tol: 1e-3,
            converge_records: 50,
            record_every: 1,
            snapshot_every: 200,
            max_steps: 500_000,
            extinction_fraction: 0.05,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::validation("dt_safety", format!("must lie in (0, 1], got {}", self.dt_safety)));
        }
        let positive = [
            ("t_end", self.t_end),
            ("hausdorff_tol", self.hausdorff_tol),
            ("mean_h_tol", self.mean_h_tol),
            ("extinction_fraction", self.extinction_fraction),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(field, format!("must be positive, got {v}")));
            }
        }
        let counts = [
            ("resample_every", self.resample_every),
            ("converge_records", self.converge_records),
            ("record_every", self.record_every),
            ("snapshot_every", self.snapshot_every),
            ("max_steps", self.max_steps),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(Error::validation(field, "must be positive"));
            }
        }
        if self.extinction_fraction >= 1.0 {
            return Err(Error::validation("extinction_fraction", "must be below 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Converged,
    Extinct,
    ExitedTube,
    StepLimit,
    /// Self-intersection or another breakdown of the discrete curve.
    Singular,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::Extinct => "extinct",
            Outcome::ExitedTube => "exited-tube",
            Outcome::StepLimit => "step-limit",
            Outcome::Singular => "singular",
        }
    }
}

/// One row of the trace. Quantities tied to Σ are NaN when no target is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowRecord {
    pub step: usize,
    pub t: f64,
    pub volume: f64,
    pub sup_psi: f64,
    /// `sup_Γ e^{c₁ t} ψ`.
    pub v: f64,
    pub dissipation: f64,
    pub hausdorff: f64,
    pub sup_h: f64,
    pub mass_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub immersion: DiscreteImmersion,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub snapshots: Vec<Snapshot>,
    pub outcome: Outcome,
    /// Extrapolated time at which the volume would vanish (extinct runs only).
    pub extinction_time: Option<f64>,
    pub c1: Option<f64>,
    pub sigma_volume: Option<f64>,
    pub steps: usize,
    pub diagnostic: Option<String>,
}

impl FlowTrace {
    pub fn last(&self) -> &FlowRecord {
        self.records.last().expect("trace has at least the initial record")
    }

    pub fn final_immersion(&self) -> &DiscreteImmersion {
        &self.snapshots.last().expect("trace keeps the final state").immersion
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,volume,sup_psi,v,dissipation,hausdorff,sup_h,mass_ratio\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt(r.t),
                fmt(r.volume),
                fmt(r.sup_psi),
                fmt(r.v),
                fmt(r.dissipation),
                fmt(r.hausdorff),
                fmt(r.sup_h),
                fmt(r.mass_ratio)
            );
        }
        out
    }
}

pub(crate) fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}

/// Reference submanifold and certificate a run is measured against.
#[derive(Debug, Clone, Copy)]
pub struct FlowTarget<'a> {
    pub region: &'a TubularRegion,
    pub cert: &'a BarrierCertificate,
}

/// Moves every sample by `dt · H` in chart coordinates.
///
/// `dt` may not exceed the explicit stability bound `(min spacing)²`; the result
/// is re-validated, so self-intersections and chart exits surface as errors.
pub fn step(imm: &DiscreteImmersion, dt: f64) -> Result<DiscreteImmersion> {
    let bound = stable_dt(imm, 1.0)?;
    if !(dt > 0.0 && dt <= bound) {
        return Err(Error::validation("dt", format!("must lie in (0, {bound:e}], got {dt:e}")));
    }
    let (_, h) = FrameField::compute(imm)?;
    advance(imm, &h, dt)
}

fn advance(imm: &DiscreteImmersion, h: &[crate::submanifold::MeanCurvature], dt: f64) -> Result<DiscreteImmersion> {
    let chart = imm.chart();
    let moved: Vec<Point> = imm
        .samples()
        .iter()
        .zip(h)
        .map(|(x, m)| chart.wrap(&(x + &m.vector * dt)))
        .collect();
    imm.with_samples(moved)
}

/// `dt_safety · (min spacing)²` with spacing measured in the metric.
pub fn stable_dt(imm: &DiscreteImmersion, dt_safety: f64) -> Result<f64> {
    let spacing = match imm.shape() {
        Shape::Curve => imm.segment_lengths()?.into_iter().fold(f64::INFINITY, f64::min),
        Shape::Grid { .. } => grid_spacing(imm)?,
    };
    Ok(dt_safety * spacing * spacing)
}

fn grid_spacing(imm: &DiscreteImmersion) -> Result<f64> {
    let Shape::Grid { rows, cols, periodic } = imm.shape() else {
        unreachable!()
    };
    let chart = imm.chart();
    let s = imm.samples();
    let mut min = f64::INFINITY;
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let g = chart.metric_at(&s[k])?;
            let mut neighbours = Vec::new();
            if i + 1 < rows || periodic[0] {
                neighbours.push(((i + 1) % rows) * cols + j);
            }
            if j + 1 < cols || periodic[1] {
                neighbours.push(i * cols + (j + 1) % cols);
            }
            for nb in neighbours {
                min = min.min(crate::ambient::norm(&g, &chart.displacement(&s[k], &s[nb])));
            }
        }
    }
    Ok(min)
}

/// Hausdorff distance between Γ and Σ: `sup_Γ √ψ` against the largest distance
/// from a Σ sample to Γ, measured with the metric at the Σ sample against the
/// two polygon segments around the nearest Γ sample.
pub fn hausdorff(gamma: &DiscreteImmersion, region: &TubularRegion) -> Result<f64> {
    let chart = gamma.chart();
    let mut sup = 0.0f64;
    for x in gamma.samples() {
        sup = sup.max(psi_at(region, x)?.max(0.0).sqrt());
    }
    let gs = gamma.samples();
    let curve = gamma.shape() == Shape::Curve;
    let (dim, axes) = (chart.dim(), chart.axes());
    for s in region.sigma.samples() {
        let g = chart.metric_at(s)?;
        let l = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite {
                point: s.iter().copied().collect(),
            })?
            .l();
        let mut d = vec![0.0; dim];
        let (mut near, mut d0) = (0, f64::INFINITY);
        for (k, x) in gs.iter().enumerate() {
            for (i, a) in axes.iter().enumerate() {
                d[i] = a.delta(s[i], x[i]);
            }
            let q: f64 = (0..dim).map(|a| d[a] * (0..dim).map(|b| g[(a, b)] * d[b]).sum::<f64>()).sum();
            if q < d0 {
                (near, d0) = (k, q);
            }
        }
        let mut best = d0.sqrt();
        if curve {
            let len = gs.len();
            let local = |k: usize| l.transpose() * chart.displacement(s, &gs[k]);
            for (a, b) in [((near + len - 1) % len, near), (near, (near + 1) % len)] {
                let (pa, pb) = (local(a), local(b));
                let ab = pb - &pa;
                let len2 = ab.norm_squared();
                let t = if len2 > 0.0 { (-pa.dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                best = best.min((pa + ab * t).norm());
            }
        }
        sup = sup.max(best);
    }
    Ok(sup)
}

struct StepState {
    t: f64,
    vol: f64,
}

/// Runs the flow from `imm0` until convergence, extinction, tube exit, breakdown,
/// or the time/step limit.
pub fn run(imm0: &DiscreteImmersion, target: Option<FlowTarget<'_>>, params: &FlowParams) -> Result<FlowTrace> {
    params.validate()?;
    let n = imm0.intrinsic_dim() as f64;
    let v0 = volume(imm0)?;
    let sigma_volume = match target {
        Some(tg) => {
            let sv = volume(&tg.region.sigma)?;
            if !(v0 < 2.0 * sv) {
                return Err(Error::validation(
                    "initial immersion",
                    format!("volume {v0} must be below twice the reference volume {sv}"),
                ));
            }
            let eps = tg.region.epsilon1;
            for (k, x) in imm0.samples().iter().enumerate() {
                let psi = psi_at(tg.region, x).map_err(|e| Error::at_sample(k, e))?;
                if psi.sqrt() > eps {
                    return Err(Error::at_sample(
                        k,
                        Error::OutOfTube {
                            point: x.iter().copied().collect(),
                            limit: eps,
                        },
                    ));
                }
            }
            Some(sv)
        }
        None => None,
    };
    let c1 = target.map(|tg| tg.cert.c1);

    let mut trace = FlowTrace {
        records: Vec::new(),
        snapshots: vec![Snapshot {
            step: 0,
            t: 0.0,
            immersion: imm0.clone(),
        }],
        outcome: Outcome::StepLimit,
        extinction_time: None,
        c1,
        sigma_volume,
        steps: 0,
        diagnostic: None,
    };

    let mut imm = imm0.clone();
    let mut t = 0.0;
    let mut dissipation = 0.0;
    let mut calm = 0usize;
    let mut prev: Option<StepState> = None;
    let mut step_no = 0usize;
    loop {
        let (_, h) = match FrameField::compute(&imm) {
            Ok(v) => v,
            Err(e) => {
                trace.outcome = Outcome::Singular;
                trace.diagnostic = Some(e.to_string());
                break;
            }
        };
        let weights = volume_weights(&imm)?;
        let vol = weights.iter().sum::<f64>();
        let sup_h = h.iter().map(|m| m.norm).fold(0.0, f64::max);

        if step_no % params.record_every == 0 {
            let (sup_psi, haus) = match target {
                Some(tg) => {
                    let mut sup = 0.0f64;
                    for x in imm.samples() {
                        sup = sup.max(psi_at(tg.region, x)?);
                    }
                    (sup, hausdorff(&imm, tg.region)?)
                }
                None => (f64::NAN, f64::NAN),
            };
            let rec = FlowRecord {
                step: step_no,
                t,
                volume: vol,
                sup_psi,
                v: c1.map_or(f64::NAN, |c| (c * t).exp() * sup_psi),
                dissipation,
                hausdorff: haus,
                sup_h,
                mass_ratio: sigma_volume.map_or(f64::NAN, |sv| vol / sv),
            };
            trace.records.push(rec);
            if trace.records.len() % params.snapshot_every == 0 {
                trace.snapshots.push(Snapshot {
                    step: step_no,
                    t,
                    immersion: imm.clone(),
                });
            }
            if let Some(tg) = target {
                if sup_psi.sqrt() > tg.region.epsilon1 {
                    trace.outcome = Outcome::ExitedTube;
                    break;
                }
            }
            let close = target.map_or(true, |_| haus < params.hausdorff_tol);
            calm = if sup_h < params.mean_h_tol && close { calm + 1 } else { 0 };
            if calm >= params.converge_records {
                trace.outcome = Outcome::Converged;
                break;
            }
        }

        if vol < params.extinction_fraction * v0 {
            trace.outcome = Outcome::Extinct;
            if let Some(p) = &prev {
                let (a, b) = (p.vol.powf(2.0 / n), vol.powf(2.0 / n));
                if a > b {
                    trace.extinction_time = Some(t + b * (t - p.t) / (a - b));
                }
            }
            break;
        }
        if t >= params.t_end * (1.0 - 1e-14) || step_no >= params.max_steps {
            trace.outcome = Outcome::StepLimit;
            break;
        }

        let dt = stable_dt(&imm, params.dt_safety)?.min(params.t_end - t);
        let mut next = match advance(&imm, &h, dt) {
            Ok(next) => next,
            Err(e) => {
                trace.outcome = match e {
                    Error::AtSample { ref source, .. } if matches!(**source, Error::Domain { .. }) => Outcome::ExitedTube,
                    Error::Domain { .. } => Outcome::ExitedTube,
                    _ => Outcome::Singular,
                };
                trace.diagnostic = Some(e.to_string());
                break;
            }
        };
        dissipation += dt * h.iter().zip(&weights).map(|(m, w)| m.norm * m.norm * w).sum::<f64>();
        prev = Some(StepState { t, vol });
        t += dt;
        step_no += 1;
        if step_no % params.resample_every == 0 && next.shape() == Shape::Curve {
            match resample(&next, next.len()) {
                Ok(r) => next = r,
                Err(e) => {
                    trace.outcome = Outcome::Singular;
                    trace.diagnostic = Some(e.to_string());
                    imm = next;
                    break;
                }
            }
        }
        imm = next;
    }
    trace.steps = step_no;
    if trace.snapshots.last().map(|s| s.step) != Some(step_no) {
        trace.snapshots.push(Snapshot {
            step: step_no,
            t,
            immersion: imm,
        });
    }
    Ok(trace)
}
