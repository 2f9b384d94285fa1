use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2, TAU};
use std::sync::{Arc, OnceLock};

use mcflab_core::ambient::{AmbientChart, Point, Profile};
use mcflab_core::barrier::{
    certify_barrier, default_psi_floor, AnalyticDistance, BarrierCertificate, DistanceModel, GridDensity, TubularRegion,
};
use mcflab_core::flow::{
    barrier_monotone_check, dissipation_check, mass_checks, run, stable_dt, step, trapping_check, uniqueness_search,
    FlowParams, FlowTarget, FlowTrace, Outcome,
};
use mcflab_core::submanifold::{volume, DiscreteImmersion};
use mcflab_core::Error;
use nalgebra::DVector;
use rand::Rng;

fn p(v: &[f64]) -> Point {
    DVector::from_column_slice(v)
}

fn plane_circle(n: usize, rho: f64) -> DiscreteImmersion {
    let chart = Arc::new(AmbientChart::flat(2, 4.0));
    DiscreteImmersion::curve_from_fn(chart, n, |t| p(&[rho * t.cos(), rho * t.sin()])).unwrap()
}

fn latitude(theta: f64) -> DiscreteImmersion {
    DiscreteImmersion::curve_from_fn(Arc::new(AmbientChart::round_sphere()), 64, |t| p(&[theta, t])).unwrap()
}

fn cosh_chart() -> Arc<AmbientChart> {
    Arc::new(AmbientChart::revolution(Profile::Cosh, 2.0))
}

struct Neck {
    region: TubularRegion,
    cert: BarrierCertificate,
    trace: FlowTrace,
}

fn neck() -> &'static Neck {
    static NECK: OnceLock<Neck> = OnceLock::new();
    NECK.get_or_init(|| {
        let chart = cosh_chart();
        let sigma = DiscreteImmersion::curve_from_fn(chart.clone(), 64, |t| p(&[0.0, t])).unwrap();
        let model = DistanceModel::Analytic(AnalyticDistance::CoordinateLevel {
            axes: vec![0],
            levels: vec![0.0],
        });
        let region = TubularRegion::new(sigma, 0.5, model, GridDensity::default()).unwrap();
        let cert = certify_barrier(&region, 1, default_psi_floor(0.5)).unwrap();
        let g0 = DiscreteImmersion::curve_from_fn(chart, 64, |t| p(&[0.3 * (2.0 * t).cos(), t])).unwrap();
        let trace = run(&g0, Some(FlowTarget { region: &region, cert: &cert }), &FlowParams::default()).unwrap();
        Neck { region, cert, trace }
    })
}

fn radii(imm: &DiscreteImmersion) -> Vec<f64> {
    imm.samples().iter().map(|x| x.norm()).collect()
}

#[test]
fn step_examples() {
    let c = plane_circle(128, 1.0);
    let next = step(&c, 1e-4).unwrap();
    for r in radii(&next) {
        assert!((r - (1.0 - 1e-4)).abs() < 1e-6, "radius {r}");
    }

    let sigma = DiscreteImmersion::curve_from_fn(cosh_chart(), 64, |t| p(&[0.0, t])).unwrap();
    let dt = stable_dt(&sigma, 1.0).unwrap();
    let next = step(&sigma, dt).unwrap();
    for (a, b) in sigma.samples().iter().zip(next.samples()) {
        assert!((a - b).norm() < 1e-8);
    }

    let lat = latitude(FRAC_PI_3);
    let next = step(&lat, 1e-3).unwrap();
    let expected = FRAC_PI_3 - 1e-3 / FRAC_PI_3.tan();
    for x in next.samples() {
        assert!((x[0] - expected).abs() < 1e-5, "theta {}", x[0]);
    }
}

#[test]
fn step_rejects_unstable_dt() {
    let c = plane_circle(64, 1.0);
    let bound = stable_dt(&c, 1.0).unwrap();
    assert!(matches!(step(&c, 2.0 * bound), Err(Error::Validation { .. })));
    assert!(matches!(step(&c, -1e-6), Err(Error::Validation { .. })));
}

#[test]
fn params_validation() {
    let bad = FlowParams {
        dt_safety: 1.5,
        ..Default::default()
    };
    assert!(matches!(bad.validate(), Err(Error::Validation { field, .. }) if field == "dt_safety"));
    assert!(FlowParams::default().validate().is_ok());
}

#[test]
fn circle_extinction() {
    let tr = run(&plane_circle(64, 1.0), None, &FlowParams::default()).unwrap();
    assert_eq!(tr.outcome, Outcome::Extinct);
    let t = tr.extinction_time.unwrap();
    assert!((t - 0.5).abs() < 0.02 * 0.5, "extinction {t}");
}

#[test]
fn latitude_extinction() {
    let tr = run(&latitude(FRAC_PI_3), None, &FlowParams::default()).unwrap();
    assert_eq!(tr.outcome, Outcome::Extinct);
    let t = tr.extinction_time.unwrap();
    assert!((t - LN_2).abs() < 0.02 * LN_2, "extinction {t}");
}

#[test]
fn extinction_time_is_first_order_in_dt() {
    let n = 64;
    // regular polygon under this stencil: dρ/dt = −2/((1 + cos(2π/N)) ρ)
    let semi = (1.0 + (TAU / n as f64).cos()) / 4.0;
    let err = |s: f64| {
        let params = FlowParams {
            dt_safety: s,
            ..Default::default()
        };
        run(&plane_circle(n, 1.0), None, &params).unwrap().extinction_time.unwrap() - semi
    };
    let ratio = err(0.2) / err(0.1);
    assert!((1.5..=2.5).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn shrinking_circle_dissipation() {
    let params = FlowParams {
        t_end: 0.25,
        ..Default::default()
    };
    let tr = run(&plane_circle(128, 1.0), None, &params).unwrap();
    assert_eq!(tr.outcome, Outcome::StepLimit);
    let last = tr.last();
    assert!((last.t - 0.25).abs() < 1e-12);
    let exact = TAU * (1.0 - 0.5f64.sqrt());
    let dl = last.volume - tr.records[0].volume;
    assert!((dl + exact).abs() < 1e-2 * exact, "Δlength {dl}");
    assert!((last.dissipation - exact).abs() < 1e-2 * exact, "dissipation {}", last.dissipation);
    assert!(dissipation_check(&tr) < 1e-2);
}

#[test]
fn stationary_neck() {
    let n = neck();
    let sigma = n.region.sigma.clone();
    let tr = run(&sigma, Some(FlowTarget { region: &n.region, cert: &n.cert }), &FlowParams::default()).unwrap();
    assert_eq!(tr.outcome, Outcome::Converged);
    assert!(tr.records.iter().all(|r| r.sup_psi.abs() < 1e-20 && r.v.abs() < 1e-20));
    assert!(dissipation_check(&tr) < 1e-10);
    let trap = trapping_check(&tr, &n.cert, 0.05);
    assert!(trap.passes && trap.violations == 0);
    assert!(barrier_monotone_check(&tr, &n.cert, 1e-4).passes);
}

#[test]
fn neck_converges_under_trapping_bound() {
    let n = neck();
    let tr = &n.trace;
    assert_eq!(tr.outcome, Outcome::Converged);
    let last = tr.last();
    assert!(last.hausdorff < 1e-3 && last.sup_h < 1e-3);

    let trap = trapping_check(tr, &n.cert, 0.05);
    assert_eq!(trap.violations, 0);
    assert!(trap.fitted_rate.unwrap() >= 1.85, "rate {:?}", trap.fitted_rate);
    assert!(trap.passes);

    let mono = barrier_monotone_check(tr, &n.cert, 1e-4);
    assert!(mono.passes, "increment {}", mono.max_increment);
    assert!(dissipation_check(tr) < 1e-2);

    let mass = mass_checks(tr).unwrap();
    assert!(mass.within_bounds && mass.multiplicity_one && mass.non_vanishing);
    assert!((0.99..=1.01).contains(&mass.final_ratio));
}

#[test]
fn trace_invariants() {
    let tr = &neck().trace;
    assert!(tr.records.windows(2).all(|w| w[1].t > w[0].t));
    assert!(tr.records.windows(2).all(|w| w[1].dissipation >= w[0].dissipation));
    assert!(tr.records.windows(2).all(|w| w[1].volume <= w[0].volume + 1e-9));
    assert!(tr.snapshots.first().unwrap().step == 0 && tr.snapshots.last().unwrap().step == tr.steps);
    let csv = tr.to_csv();
    assert_eq!(csv.lines().count(), tr.records.len() + 1);
    assert!(csv.starts_with("t,volume,sup_psi,v,dissipation,hausdorff,sup_h,mass_ratio\n"));
}

#[test]
fn run_preconditions() {
    let n = neck();
    let target = FlowTarget { region: &n.region, cert: &n.cert };
    let outside = DiscreteImmersion::curve_from_fn(cosh_chart(), 64, |t| p(&[0.7, t])).unwrap();
    assert!(matches!(
        run(&outside, Some(target), &FlowParams::default()),
        Err(Error::AtSample { index: 0, .. })
    ));
    let wiggly = DiscreteImmersion::curve_from_fn(cosh_chart(), 128, |t| p(&[0.45 * (12.0 * t).sin(), t])).unwrap();
    assert!(volume(&wiggly).unwrap() > 2.0 * volume(&n.region.sigma).unwrap());
    assert!(matches!(
        run(&wiggly, Some(target), &FlowParams::default()),
        Err(Error::Validation { .. })
    ));
}

#[test]
fn equator_negative_control() {
    let chart = Arc::new(AmbientChart::round_sphere());
    let sigma = DiscreteImmersion::curve_from_fn(chart.clone(), 64, |t| p(&[FRAC_PI_2, t])).unwrap();
    let model = DistanceModel::Analytic(AnalyticDistance::CoordinateLevel {
        axes: vec![0],
        levels: vec![FRAC_PI_2],
    });
    let region = TubularRegion::new(sigma, 0.3, model, GridDensity::default()).unwrap();
    let cert = BarrierCertificate::forced(0.3, 0.1, 1);
    let target = FlowTarget { region: &region, cert: &cert };
    let g0 = DiscreteImmersion::curve_from_fn(chart.clone(), 64, |t| p(&[FRAC_PI_2 + 0.05 + 0.1 * t.cos(), t])).unwrap();
    let tr = run(&g0, Some(target), &FlowParams::default()).unwrap();
    assert_ne!(tr.outcome, Outcome::Converged);
    let trap = trapping_check(&tr, &cert, 0.05);
    assert!(trap.violations > 0 && !trap.passes);
    assert!(!barrier_monotone_check(&tr, &cert, 1e-4).passes);

    let params = FlowParams::default();
    let perturb = |rng: &mut rand_chacha::ChaCha8Rng| {
        let (a0, a1, ph) = (rng.gen_range(-0.15..0.15), rng.gen_range(-0.05..0.05), rng.gen_range(0.0..TAU));
        DiscreteImmersion::curve_from_fn(chart.clone(), 64, |t| p(&[FRAC_PI_2 + a0 + a1 * (t + ph).cos(), t]))
    };
    let report = uniqueness_search(target, &perturb, 3, 7, &params).unwrap();
    assert_eq!(report.converged_to_sigma, 0);
    assert!(report.stabilized_elsewhere.is_empty());
}

#[test]
fn uniqueness_needs_passing_certificate() {
    let n = neck();
    let failing = BarrierCertificate::forced(0.5, -0.5, 1);
    let perturb = |_: &mut rand_chacha::ChaCha8Rng| Ok(n.region.sigma.clone());
    let err = uniqueness_search(
        FlowTarget {
            region: &n.region,
            cert: &failing,
        },
        &perturb,
        1,
        0,
        &FlowParams::default(),
    );
    assert!(matches!(err, Err(Error::Validation { .. })));
}

#[test]
fn uniqueness_records_failed_seeds() {
    let n = neck();
    let params = FlowParams::default();
    let perturb = |rng: &mut rand_chacha::ChaCha8Rng| {
        let a: f64 = rng.gen_range(0.1..0.2);
        if a > 0.15 {
            DiscreteImmersion::curve_from_fn(cosh_chart(), 64, |t| p(&[0.9, t]))
        } else {
            DiscreteImmersion::curve_from_fn(cosh_chart(), 64, |t| p(&[a * (2.0 * t).cos(), t]))
        }
    };
    let target = FlowTarget { region: &n.region, cert: &n.cert };
    let report = uniqueness_search(target, &perturb, 4, 3, &params).unwrap();
    assert_eq!(report.results.len(), 4);
    assert_eq!(report.converged_to_sigma + report.failed, 4);
    assert!(report.results.iter().filter(|r| r.error.is_some()).all(|r| r.outcome.is_none()));
    let again = uniqueness_search(target, &perturb, 4, 3, &params).unwrap();
    assert_eq!(
        serde_json::to_string(&report).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}
