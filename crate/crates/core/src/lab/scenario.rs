use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2, PI, TAU};
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::Operation;
use crate::ambient::{AmbientChart, Point, Profile, WarpProfile};
use crate::barrier::{AnalyticDistance, DistanceModel};
use crate::error::{Error, Result};
use crate::submanifold::DiscreteImmersion;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed-form solution of the continuous problem.
    Analytic,
    /// Frozen table from a computer-algebra computation.
    CasTable,
    /// Exact solution of the spatially discretized equations.
    SemiDiscrete,
    /// Negative control: the check passes when the property fails.
    Control,
    /// Identity that holds by construction.
    Exact,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::CasTable => "cas-table",
            Provenance::SemiDiscrete => "semi-discrete",
            Provenance::Control => "control",
            Provenance::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimKind {
    /// Desk-scale analog of a theorem-level statement.
    TheoremAnalog,
    /// Plumbing and solver self-check.
    SelfCheck,
}

impl ClaimKind {
    pub fn label(self) -> &'static str {
        match self {
            ClaimKind::TheoremAnalog => "theorem-analog",
            ClaimKind::SelfCheck => "self-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Expect {
    Near { value: f64, tol: f64 },
    NearRel { value: f64, rel: f64 },
    AtLeast { value: f64 },
    Below { value: f64 },
    Is { value: String },
    IsNot { value: String },
}

impl Expect {
    pub fn describe(&self) -> String {
        match self {
            Expect::Near { value, tol } => format!("{value} ± {tol:e}"),
            Expect::NearRel { value, rel } => format!("{value} ± {}%", rel * 100.0),
            Expect::AtLeast { value } => format!(">= {value}"),
            Expect::Below { value } => format!("< {value:e}"),
            Expect::Is { value } => value.clone(),
            Expect::IsNot { value } => format!("not {value}"),
        }
    }
}

/// Which pipeline stage produces a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Stability,
    Barrier,
    Flow,
    Uniqueness,
}

impl Stage {
    pub fn operation(self) -> Operation {
        match self {
            Stage::Stability => Operation::CertifyStability,
            Stage::Barrier => Operation::CertifyBarrier,
            Stage::Flow => Operation::Flow,
            Stage::Uniqueness => Operation::Uniqueness,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub stage: Stage,
    pub quantity: &'static str,
    pub expect: Expect,
    pub provenance: Provenance,
    pub kind: ClaimKind,
}

fn exp(stage: Stage, quantity: &'static str, expect: Expect, provenance: Provenance, kind: ClaimKind) -> Expectation {
    Expectation {
        stage,
        quantity,
        expect,
        provenance,
        kind,
    }
}

fn near(value: f64, tol: f64) -> Expect {
    Expect::Near { value, tol }
}

fn is(v: &str) -> Expect {
    Expect::Is { value: v.into() }
}

fn is_not(v: &str) -> Expect {
    Expect::IsNot { value: v.into() }
}

/// Chart, reference submanifold and its distance model.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub chart: Arc<AmbientChart>,
    pub sigma: DiscreteImmersion,
    pub model: Option<DistanceModel>,
    /// Additional patches certified together with `sigma` for stability.
    pub extra_patches: Vec<DiscreteImmersion>,
    /// Tabulated value every eigenvalue of `S` should match.
    pub reference_eigenvalue: Option<f64>,
}

/// What the flow stage runs toward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowMode {
    /// No reference target; the flow runs to extinction.
    Free,
    /// Target Σ with a computed barrier certificate.
    Certified,
    /// Target Σ with a hand-set certificate constant (negative control).
    Forced { c1: f64 },
}

/// Effective numeric settings a scenario's expectations depend on.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub epsilon1: f64,
    pub seeds: usize,
}

#[derive(Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub operations: &'static [Operation],
    pub default_epsilon1: f64,
    /// Amplitude of the canonical flow initial datum.
    pub default_amplitude: f64,
    pub flow_mode: FlowMode,
    build: fn() -> Result<Geometry>,
    initial: fn(&Geometry, f64) -> Result<DiscreteImmersion>,
    perturb: Option<fn(&Geometry, f64, &mut ChaCha8Rng) -> Result<DiscreteImmersion>>,
    expected: fn(&Settings) -> Vec<Expectation>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario").field("name", &self.name).finish()
    }
}

impl Scenario {
    pub fn supports(&self, op: Operation) -> bool {
        op == Operation::All || self.operations.contains(&op)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        (self.build)()
    }

    pub fn initial(&self, geom: &Geometry, amplitude: f64) -> Result<DiscreteImmersion> {
        (self.initial)(geom, amplitude)
    }

    /// Random initial immersion inside the tube, for the uniqueness search.
    pub fn perturbation(&self, geom: &Geometry, epsilon1: f64, rng: &mut ChaCha8Rng) -> Result<DiscreteImmersion> {
        let f = self
            .perturb
            .ok_or_else(|| Error::validation("op", format!("{} has no uniqueness search", self.name)))?;
        f(geom, epsilon1, rng)
    }

    pub fn expectations(&self, settings: &Settings) -> Vec<Expectation> {
        (self.expected)(settings)
    }
}

/// Documented scenarios outside the executable registry.
pub const ASPIRATIONAL: &[(&str, &str)] = &[
    (
        "special-lagrangian-cy",
        "special Lagrangians in a Calabi–Yau manifold; needs a Ricci-flat metric and Lagrangian-preserving flow (not executable)",
    ),
    (
        "lagrangian-near-singular",
        "Lagrangian flow from near-singular initial data; needs continuation through singularities (not executable)",
    ),
];

const CURVE_SAMPLES: usize = 64;

fn p(v: &[f64]) -> Point {
    DVector::from_column_slice(v)
}

fn level(axes: &[usize], levels: &[f64]) -> Option<DistanceModel> {
    Some(DistanceModel::Analytic(AnalyticDistance::CoordinateLevel {
        axes: axes.to_vec(),
        levels: levels.to_vec(),
    }))
}

fn curve(chart: &Arc<AmbientChart>, f: impl Fn(f64) -> Point) -> Result<DiscreteImmersion> {
    DiscreteImmersion::curve_from_fn(chart.clone(), CURVE_SAMPLES, f)
}

/// Random trigonometric polynomial of degree 3 (constant mode included) with
/// sup norm drawn uniformly from `[0.5, 0.8]·ε₁`, sampled at the curve parameters.
fn fourier_profile(epsilon1: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let coeffs: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let target = rng.gen_range(0.5..0.8) * epsilon1;
    let vals: Vec<f64> = (0..CURVE_SAMPLES)
        .map(|k| {
            let t = TAU * k as f64 / CURVE_SAMPLES as f64;
            coeffs
                .iter()
                .enumerate()
                .map(|(j, (a, b))| a * (j as f64 * t).cos() + b * (j as f64 * t).sin())
                .sum()
        })
        .collect();
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vals.into_iter().map(|v| v * target / sup).collect()
}

fn at_samples(chart: &Arc<AmbientChart>, f: impl Fn(usize, f64) -> Point) -> Result<DiscreteImmersion> {
    let samples = (0..CURVE_SAMPLES)
        .map(|k| chart.wrap(&f(k, TAU * k as f64 / CURVE_SAMPLES as f64)))
        .collect();
    DiscreteImmersion::curve(chart.clone(), samples)
}

fn flat_circle() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::flat(2, 4.0));
    let sigma = curve(&chart, |t| p(&[t.cos(), t.sin()]))?;
    Ok(Geometry {
        chart,
        sigma,
        model: None,
        extra_patches: Vec::new(),
        reference_eigenvalue: None,
    })
}

fn sphere_latitude() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::round_sphere());
    let sigma = curve(&chart, |t| p(&[FRAC_PI_3, t]))?;
    Ok(Geometry {
        chart,
        sigma,
        model: None,
        extra_patches: Vec::new(),
        reference_eigenvalue: None,
    })
}

fn sphere_equator() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::round_sphere());
    let sigma = curve(&chart, |t| p(&[FRAC_PI_2, t]))?;
    Ok(Geometry {
        chart,
        sigma,
        model: level(&[0], &[FRAC_PI_2]),
        extra_patches: Vec::new(),
        reference_eigenvalue: None,
    })
}

fn torus_geodesic() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::flat_torus(2));
    let sigma = curve(&chart, |t| p(&[t, 1.0]))?;
    Ok(Geometry {
        chart,
        sigma,
        model: level(&[1], &[1.0]),
        extra_patches: Vec::new(),
        reference_eigenvalue: None,
    })
}

fn cosh_neck() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::revolution(Profile::Cosh, 2.0));
    let sigma = curve(&chart, |t| p(&[0.0, t]))?;
    Ok(Geometry {
        chart,
        sigma,
        model: level(&[0], &[0.0]),
        extra_patches: Vec::new(),
        reference_eigenvalue: None,
    })
}

fn warped_neck() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::warped3d(WarpProfile::CoshCosh, 2.0));
    let sigma = curve(&chart, |t| p(&[0.0, 0.0, t]))?;
    Ok(Geometry {
        chart,
        sigma,
        model: level(&[0, 1], &[0.0, 0.0]),
        extra_patches: Vec::new(),
        reference_eigenvalue: None,
    })
}

fn sphere_grid(chart: &Arc<AmbientChart>, th: (f64, f64, usize), ph: (f64, f64, usize), periodic: bool) -> Result<DiscreteImmersion> {
    let mut pts = Vec::with_capacity(th.2 * ph.2);
    let ph_den = if periodic { ph.2 } else { ph.2 - 1 };
    for i in 0..th.2 {
        let t = th.0 + (th.1 - th.0) * i as f64 / (th.2 - 1) as f64;
        for j in 0..ph.2 {
            let f = ph.0 + (ph.1 - ph.0) * j as f64 / ph_den as f64;
            pts.push(chart.wrap(&p(&[t, f, 0.0, 0.0])));
        }
    }
    DiscreteImmersion::surface(chart.clone(), pts, th.2, ph.2, [false, periodic])
}

/// Bolt of Eguchi–Hanson (a = 1): a 32×64 band in θ ∈ [π/8, 7π/8] plus two 9×9
/// patches covering the polar caps. The caps are the images of the poles under
/// the isometric rotation that carries them onto the equator at φ = 0 and φ = π.
fn eguchi_hanson() -> Result<Geometry> {
    let chart = Arc::new(AmbientChart::eguchi_hanson(1.0, 1.0));
    let cap = PI / 8.0;
    let w = 1.2 * cap;
    let sigma = sphere_grid(&chart, (cap, PI - cap, 32), (0.0, TAU, 64), true)?;
    let north = sphere_grid(&chart, (FRAC_PI_2 - w, FRAC_PI_2 + w, 9), (-w, w, 9), false)?;
    let south = sphere_grid(&chart, (FRAC_PI_2 - w, FRAC_PI_2 + w, 9), (PI - w, PI + w, 9), false)?;
    Ok(Geometry {
        chart,
        sigma,
        model: None,
        extra_patches: vec![north, south],
        reference_eigenvalue: Some(EGUCHI_HANSON_BOLT_EIGENVALUE),
    })
}

fn same(geom: &Geometry, _: f64) -> Result<DiscreteImmersion> {
    Ok(geom.sigma.clone())
}

fn no_initial(_: &Geometry, _: f64) -> Result<DiscreteImmersion> {
    Err(Error::validation("op", "scenario has no flow"))
}

fn cosh_initial(geom: &Geometry, a: f64) -> Result<DiscreteImmersion> {
    curve(&geom.chart, |t| p(&[a * (2.0 * t).cos(), t]))
}

fn warped_initial(geom: &Geometry, a: f64) -> Result<DiscreteImmersion> {
    curve(&geom.chart, |t| p(&[a * (2.0 * t).cos(), a * (2.0 * t).sin(), t]))
}

fn equator_initial(geom: &Geometry, a: f64) -> Result<DiscreteImmersion> {
    curve(&geom.chart, |t| p(&[FRAC_PI_2 + a * (0.5 + t.cos()) / 1.5, t]))
}

fn cosh_perturb(geom: &Geometry, eps: f64, rng: &mut ChaCha8Rng) -> Result<DiscreteImmersion> {
    let r = fourier_profile(eps, rng);
    at_samples(&geom.chart, |k, t| p(&[r[k], t]))
}

fn warped_perturb(geom: &Geometry, eps: f64, rng: &mut ChaCha8Rng) -> Result<DiscreteImmersion> {
    // each normal component within 0.8ε₁/√2, so the pair stays inside the tube
    let x = fourier_profile(eps / 2f64.sqrt(), rng);
    let y = fourier_profile(eps / 2f64.sqrt(), rng);
    at_samples(&geom.chart, |k, t| p(&[x[k], y[k], t]))
}

fn equator_perturb(geom: &Geometry, eps: f64, rng: &mut ChaCha8Rng) -> Result<DiscreteImmersion> {
    let r = fourier_profile(eps, rng);
    at_samples(&geom.chart, |k, t| p(&[FRAC_PI_2 + r[k], t]))
}

/// Pre-safety barrier constant of a neck whose normal distance solves `u'' = u`.
pub fn neck_c1(epsilon1: f64) -> f64 {
    2.0 * epsilon1.tanh() / epsilon1
}

use ClaimKind::{SelfCheck, TheoremAnalog};
use Provenance::{Analytic, CasTable, Control, Exact, SemiDiscrete};
use Stage::{Barrier, Flow, Stability, Uniqueness};

fn flat_circle_expected(_: &Settings) -> Vec<Expectation> {
    let n = CURVE_SAMPLES as f64;
    // curvature of the regular N-gon under the sample stencil
    let kappa = 2.0 / (1.0 + (TAU / n).cos());
    vec![
        exp(Stability, "c0", near(-1.0, 1e-2), Analytic, SelfCheck),
        exp(Stability, "c0", near(-kappa * kappa, 1e-6), SemiDiscrete, SelfCheck),
        exp(Flow, "outcome", is("extinct"), Analytic, SelfCheck),
        exp(Flow, "extinction_time", Expect::NearRel { value: 0.5, rel: 0.02 }, Analytic, SelfCheck),
        exp(
            Flow,
            "extinction_time",
            near(0.5 / kappa, 1e-3),
            SemiDiscrete,
            SelfCheck,
        ),
        exp(Flow, "dissipation_residual", Expect::Below { value: 1e-2 }, Analytic, SelfCheck),
    ]
}

fn latitude_expected(_: &Settings) -> Vec<Expectation> {
    vec![
        exp(Stability, "c0", near(-4.0 / 3.0, 1e-3), Analytic, SelfCheck),
        exp(Flow, "outcome", is("extinct"), Analytic, SelfCheck),
        exp(Flow, "extinction_time", Expect::NearRel { value: LN_2, rel: 0.02 }, Analytic, SelfCheck),
    ]
}

fn equator_expected(s: &Settings) -> Vec<Expectation> {
    vec![
        exp(Stability, "c0", near(-1.0, 1e-3), Analytic, TheoremAnalog),
        exp(Stability, "verdict", is("not-strongly-stable"), Control, TheoremAnalog),
        exp(Barrier, "verdict", is("fail"), Control, TheoremAnalog),
        exp(Flow, "outcome", is_not("converged"), Control, TheoremAnalog),
        exp(Flow, "trapping_violations", Expect::AtLeast { value: 1.0 }, Control, TheoremAnalog),
        exp(Uniqueness, "converged_to_sigma", near(0.0, 0.0), Control, TheoremAnalog),
        exp(Uniqueness, "not_converged", near(s.seeds as f64, 0.0), Control, TheoremAnalog),
    ]
}

fn torus_expected(_: &Settings) -> Vec<Expectation> {
    vec![
        exp(Stability, "c0", near(0.0, 1e-6), Exact, TheoremAnalog),
        exp(Stability, "verdict", is("not-strongly-stable"), Exact, TheoremAnalog),
        exp(Barrier, "c1_raw", near(0.0, 1e-6), Exact, SelfCheck),
        exp(Barrier, "verdict", is("fail"), Exact, SelfCheck),
    ]
}

fn stable_neck_expected(s: &Settings, c0_tol: f64) -> Vec<Expectation> {
    vec![
        exp(Stability, "c0", near(1.0, c0_tol), Analytic, TheoremAnalog),
        exp(Stability, "verdict", is("strongly-stable"), Analytic, TheoremAnalog),
        exp(Barrier, "c1_raw", near(neck_c1(s.epsilon1), 1e-2), Analytic, TheoremAnalog),
        exp(Barrier, "verdict", is("pass"), Analytic, TheoremAnalog),
        exp(Flow, "outcome", is("converged"), Analytic, TheoremAnalog),
        exp(Flow, "hausdorff", Expect::Below { value: 1e-3 }, Analytic, TheoremAnalog),
        exp(Flow, "sup_h", Expect::Below { value: 1e-3 }, Analytic, TheoremAnalog),
        exp(Flow, "mass_ratio", near(1.0, 1e-2), Analytic, TheoremAnalog),
        exp(Flow, "trapping_violations", near(0.0, 0.0), Analytic, TheoremAnalog),
        exp(Flow, "fitted_rate", Expect::AtLeast { value: 1.85 }, Analytic, TheoremAnalog),
        exp(Flow, "monotone_increment", Expect::Below { value: 1e-4 }, Analytic, TheoremAnalog),
        exp(Flow, "dissipation_residual", Expect::Below { value: 1e-2 }, Analytic, SelfCheck),
        exp(Uniqueness, "converged_to_sigma", near(s.seeds as f64, 0.0), Analytic, TheoremAnalog),
        exp(Uniqueness, "stabilized_elsewhere", near(0.0, 0.0), Analytic, TheoremAnalog),
    ]
}

fn cosh_expected(s: &Settings) -> Vec<Expectation> {
    stable_neck_expected(s, 1e-3)
}

fn warped_expected(s: &Settings) -> Vec<Expectation> {
    stable_neck_expected(s, 1e-2)
}

/// Smallest bolt eigenvalue of `S` from the computer-algebra table (a = 1).
pub const EGUCHI_HANSON_BOLT_EIGENVALUE: f64 = 4.0;

fn eh_expected(_: &Settings) -> Vec<Expectation> {
    vec![
        exp(Stability, "c0", near(EGUCHI_HANSON_BOLT_EIGENVALUE, 1e-3), CasTable, TheoremAnalog),
        exp(Stability, "max_table_deviation", Expect::Below { value: 1e-3 }, CasTable, TheoremAnalog),
        exp(Stability, "verdict", is("strongly-stable"), CasTable, TheoremAnalog),
    ]
}

use Operation::{CertifyBarrier, CertifyStability, Flow as FlowOp, Uniqueness as UniquenessOp};

/// All executable scenarios, in listing order.
pub fn registry() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "flat-circle",
            description: "unit circle in the plane; shrinks to a point at t = 1/2",
            operations: &[CertifyStability, FlowOp],
            default_epsilon1: 0.5,
            default_amplitude: 0.0,
            flow_mode: FlowMode::Free,
            build: flat_circle,
            initial: same,
            perturb: None,
            expected: flat_circle_expected,
        },
        Scenario {
            name: "sphere-latitude",
            description: "latitude θ = π/3 on the unit sphere; collapses to the pole at t = ln 2",
            operations: &[CertifyStability, FlowOp],
            default_epsilon1: 0.5,
            default_amplitude: 0.0,
            flow_mode: FlowMode::Free,
            build: sphere_latitude,
            initial: same,
            perturb: None,
            expected: latitude_expected,
        },
        Scenario {
            name: "sphere-equator",
            description: "equator of the unit sphere; unstable geodesic (negative control)",
            operations: &[CertifyStability, CertifyBarrier, FlowOp, UniquenessOp],
            default_epsilon1: 0.3,
            default_amplitude: 0.1,
            flow_mode: FlowMode::Forced { c1: 0.1 },
            build: sphere_equator,
            initial: equator_initial,
            perturb: Some(equator_perturb),
            expected: equator_expected,
        },
        Scenario {
            name: "flat-torus-geodesic",
            description: "closed geodesic of the flat torus; boundary case c0 = 0",
            operations: &[CertifyStability, CertifyBarrier],
            default_epsilon1: 0.5,
            default_amplitude: 0.0,
            flow_mode: FlowMode::Free,
            build: torus_geodesic,
            initial: no_initial,
            perturb: None,
            expected: torus_expected,
        },
        Scenario {
            name: "cosh-neck",
            description: "neck of the catenoid-type surface dr² + cosh²r dθ² (codim 1 strongly stable)",
            operations: &[CertifyStability, CertifyBarrier, FlowOp, UniquenessOp],
            default_epsilon1: 0.5,
            default_amplitude: 0.3,
            flow_mode: FlowMode::Certified,
            build: cosh_neck,
            initial: cosh_initial,
            perturb: Some(cosh_perturb),
            expected: cosh_expected,
        },
        Scenario {
            name: "warped3d-neck",
            description: "core circle of dx² + dy² + cosh²x cosh²y dθ² (codim 2 strongly stable)",
            operations: &[CertifyStability, CertifyBarrier, FlowOp, UniquenessOp],
            default_epsilon1: 0.5,
            default_amplitude: 0.3,
            flow_mode: FlowMode::Certified,
            build: warped_neck,
            initial: warped_initial,
            perturb: Some(warped_perturb),
            expected: warped_expected,
        },
        Scenario {
            name: "eguchi-hanson-zero-section",
            description: "bolt 2-sphere of the Eguchi–Hanson metric (stability certification only)",
            operations: &[CertifyStability],
            default_epsilon1: 0.5,
            default_amplitude: 0.0,
            flow_mode: FlowMode::Free,
            build: eguchi_hanson,
            initial: no_initial,
            perturb: None,
            expected: eh_expected,
        },
    ]
}

pub fn find(name: &str) -> Result<Scenario> {
    registry()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Names and one-line descriptions, executable scenarios first.
pub fn list_scenarios() -> Vec<(String, String)> {
    registry()
        .into_iter()
        .map(|s| (s.name.to_string(), s.description.to_string()))
        .chain(ASPIRATIONAL.iter().map(|(n, d)| (n.to_string(), d.to_string())))
        .collect()
}
