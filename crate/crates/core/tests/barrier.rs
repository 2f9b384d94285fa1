use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::{Arc, OnceLock};

use mcflab_core::ambient::{AmbientChart, Axis, MetricKind, Point, Profile, WarpProfile};
use mcflab_core::barrier::{
    certify_barrier, certify_barrier_with, default_psi_floor, hessian_psi, squared_distance, AnalyticDistance,
    BarrierOptions, DistanceModel, FermiProjector, GridDensity, TubularRegion,
};
use mcflab_core::submanifold::DiscreteImmersion;
use mcflab_core::Error;
use nalgebra::DVector;
use proptest::prelude::*;

fn p(v: &[f64]) -> Point {
    DVector::from_column_slice(v)
}

fn level(axes: &[usize], levels: &[f64]) -> DistanceModel {
    DistanceModel::Analytic(AnalyticDistance::CoordinateLevel {
        axes: axes.to_vec(),
        levels: levels.to_vec(),
    })
}

fn cosh_region(eps: f64) -> TubularRegion {
    let chart = Arc::new(AmbientChart::revolution(Profile::Cosh, 2.0));
    let sigma = DiscreteImmersion::curve_from_fn(chart, 64, |t| p(&[0.0, t])).unwrap();
    TubularRegion::new(sigma, eps, level(&[0], &[0.0]), GridDensity::default()).unwrap()
}

fn equator_region(eps: f64) -> TubularRegion {
    let sigma = DiscreteImmersion::curve_from_fn(Arc::new(AmbientChart::round_sphere()), 64, |t| p(&[FRAC_PI_2, t])).unwrap();
    TubularRegion::new(sigma, eps, level(&[0], &[FRAC_PI_2]), GridDensity::default()).unwrap()
}

fn warped_region(eps: f64) -> TubularRegion {
    let chart = Arc::new(AmbientChart::warped3d(WarpProfile::CoshCosh, 2.0));
    let sigma = DiscreteImmersion::curve_from_fn(chart, 64, |t| p(&[0.0, 0.0, t])).unwrap();
    TubularRegion::new(sigma, eps, level(&[0, 1], &[0.0, 0.0]), GridDensity::default()).unwrap()
}

fn plane_circle_region(eps: f64) -> TubularRegion {
    let chart = Arc::new(AmbientChart::flat(2, 4.0));
    let sigma = DiscreteImmersion::curve_from_fn(chart, 128, |t| p(&[t.cos(), t.sin()])).unwrap();
    let model = DistanceModel::Analytic(AnalyticDistance::PlanarCircle {
        center: [0.0, 0.0],
        radius: 1.0,
    });
    TubularRegion::new(sigma, eps, model, GridDensity::default()).unwrap()
}

fn line_region() -> TubularRegion {
    let chart = AmbientChart::new(vec![Axis::periodic(TAU), Axis::bounded(-2.0, 2.0)], MetricKind::Flat, 1.0).unwrap();
    let sigma = DiscreteImmersion::curve_from_fn(Arc::new(chart), 32, |t| p(&[t, 0.0])).unwrap();
    TubularRegion::new(sigma, 0.5, level(&[1], &[0.0]), GridDensity::default()).unwrap()
}

fn numeric(region: &TubularRegion) -> TubularRegion {
    TubularRegion::numerical(region.sigma.clone(), region.epsilon1, region.density).unwrap()
}

#[test]
fn squared_distance_examples() {
    let r = plane_circle_region(0.6);
    let on = squared_distance(&r, &p(&[0.0, 1.0])).unwrap();
    assert!(on.psi.abs() < 1e-15 && on.gradient.norm() < 1e-15);
    let e = squared_distance(&r, &p(&[1.5 * 0.3f64.cos(), 1.5 * 0.3f64.sin()])).unwrap();
    assert!((e.psi - 0.25).abs() < 1e-12);

    let r = cosh_region(0.5);
    assert!((squared_distance(&r, &p(&[0.4, 1.0])).unwrap().psi - 0.16).abs() < 1e-12);
    assert!(matches!(squared_distance(&r, &p(&[1.2, 1.0])), Err(Error::OutOfTube { .. })));
}

#[test]
fn numerical_distance_matches_closed_forms() {
    let cases: Vec<(TubularRegion, Vec<Point>)> = vec![
        (cosh_region(0.5), vec![p(&[0.4, 1.0]), p(&[-0.3, 5.9]), p(&[0.0, 0.3])]),
        (plane_circle_region(0.5), vec![p(&[1.3, 0.2]), p(&[-0.2, -0.7])]),
        (warped_region(0.5), vec![p(&[0.3, -0.2, 2.0]), p(&[-0.1, 0.25, 6.1])]),
    ];
    for (region, points) in cases {
        let num = numeric(&region);
        for x in points {
            let a = squared_distance(&region, &x).unwrap();
            let b = squared_distance(&num, &x).unwrap();
            assert!((a.psi - b.psi).abs() < 1e-8, "{} vs {} at {x:?}", a.psi, b.psi);
            assert!((a.dpsi - b.dpsi).amax() < 1e-6);
        }
    }
}

#[test]
fn projection_failure_is_reported() {
    let region = cosh_region(0.5);
    let mut proj = FermiProjector::new(&region.sigma).unwrap();
    proj.max_iter = 0;
    assert!(matches!(proj.project(&p(&[0.4, 1.0]), None), Err(Error::Distance { .. })));
}

#[test]
fn gradient_matches_finite_differences() {
    let h = 1e-5;
    for region in [cosh_region(0.5), warped_region(0.5), plane_circle_region(0.5), numeric(&cosh_region(0.5))] {
        for gp in region.sample_grid.iter().step_by(37) {
            let x = DVector::from_column_slice(&gp.point);
            let e = squared_distance(&region, &x).unwrap();
            for a in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += h;
                xm[a] -= h;
                let fd = (squared_distance(&region, &xp).unwrap().psi - squared_distance(&region, &xm).unwrap().psi) / (2.0 * h);
                assert!((fd - e.dpsi[a]).abs() < 1e-5, "axis {a}: {fd} vs {}", e.dpsi[a]);
            }
        }
    }
}

#[test]
fn hessian_examples() {
    let line = line_region();
    for x in [p(&[0.3, 0.2]), p(&[5.0, -0.4])] {
        let h = hessian_psi(&line, &x).unwrap();
        assert!(h.eigenvalues[0].abs() < 1e-8 && (h.eigenvalues[1] - 2.0).abs() < 1e-8);
    }

    let h = hessian_psi(&cosh_region(0.5), &p(&[0.5, 2.0])).unwrap();
    assert!((h.eigenvalues[0] - 0.46212).abs() < 1e-5 && (h.eigenvalues[1] - 2.0).abs() < 1e-6);

    let h = hessian_psi(&equator_region(0.5), &p(&[FRAC_PI_2 - 0.3, 1.0])).unwrap();
    let expected = 2.0 * (-0.3) * (FRAC_PI_2 - 0.3f64).tan().recip();
    assert!((h.eigenvalues[0] - expected).abs() < 1e-6, "{:?}", h.eigenvalues);
    assert!((expected + 0.185602).abs() < 1e-6);

    let num = numeric(&cosh_region(0.5));
    let h = hessian_psi(&num, &p(&[0.3, 2.0])).unwrap();
    let exact = 2.0 * 0.3 * 0.3f64.tanh();
    assert!((h.eigenvalues[0] - exact).abs() < 1e-4 && (h.eigenvalues[1] - 2.0).abs() < 1e-4, "{:?}", h.eigenvalues);
}

#[test]
fn region_invariants() {
    for region in [cosh_region(0.5), warped_region(0.4), equator_region(0.3), plane_circle_region(0.3)] {
        let eps2 = region.epsilon1 * region.epsilon1;
        let dirs = if region.sigma.codim() == 1 { 2 } else { 8 };
        assert_eq!(region.sample_grid.len(), 16 * 8 * dirs);
        for gp in &region.sample_grid {
            let x = DVector::from_column_slice(&gp.point);
            let e = squared_distance(&region, &x).unwrap();
            assert!(e.psi >= 0.0 && e.psi <= eps2 + 1e-8, "ψ = {} > {eps2}", e.psi);
            assert!((e.psi.sqrt() - gp.radius).abs() < 1e-6);
            let grad2 = e.dpsi.dot(&e.gradient);
            assert!(grad2 <= 4.0 * e.psi + 1e-8);
            let h = hessian_psi(&region, &x).unwrap();
            assert!(h.symmetry_residual < 1e-6);
        }
        for s in region.sigma.samples() {
            assert!(squared_distance(&region, s).unwrap().psi < 1e-12);
        }
    }
}

#[test]
fn cosh_neck_certificates() {
    let c = certify_barrier(&cosh_region(0.5), 1, default_psi_floor(0.5)).unwrap();
    assert!((c.c1_raw - 1.848).abs() < 1e-2 && c.passes());
    assert!((c.c1 - 0.95 * c.c1_raw).abs() < 1e-15);
    assert!(c.c1 <= c.min_ratio().unwrap());
    assert!(c.refinements >= 1);
    assert_eq!(c.evidence_csv().lines().count(), c.evidence.len() + 1);

    let c05 = certify_barrier(&cosh_region(0.05), 1, default_psi_floor(0.05)).unwrap();
    let exact = 2.0 * 0.05f64.tanh() / 0.05;
    assert!((c05.c1_raw - exact).abs() < 1e-6);
    let c10 = certify_barrier(&cosh_region(0.1), 1, default_psi_floor(0.1)).unwrap();
    // c₁(ε) = 2 − (2/3) ε² + O(ε⁴)
    let limit = (4.0 * c05.c1_raw - c10.c1_raw) / 3.0;
    assert!((limit - 2.0).abs() < 1e-3, "{limit}");
}

#[test]
fn warped_neck_certificate_passes() {
    let opts = BarrierOptions { refine: false, ..Default::default() };
    let c = certify_barrier_with(&warped_region(0.5), 1, default_psi_floor(0.5), &opts).unwrap();
    assert!(c.passes());
    assert!((c.c1_raw - 2.0 * 0.5f64.tanh() / 0.5).abs() < 1e-2, "{}", c.c1_raw);
}

#[test]
fn sphere_equator_fails() {
    for eps in [0.1, 0.2, 0.3] {
        let c = certify_barrier(&equator_region(eps), 1, default_psi_floor(eps)).unwrap();
        assert!(!c.passes() && c.c1_raw < 0.0);
    }
}

#[test]
fn shrinking_the_tube_never_lowers_c1() {
    let opts = BarrierOptions { refine: false, ..Default::default() };
    for make in [cosh_region as fn(f64) -> TubularRegion, warped_region] {
        let mut last = f64::NEG_INFINITY;
        for eps in [0.6, 0.4, 0.2, 0.1] {
            let c = certify_barrier_with(&make(eps), 1, default_psi_floor(eps), &opts).unwrap();
            assert!(c.c1 >= last - 1e-9);
            last = c.c1;
        }
    }
}

#[test]
fn numerical_certificate_tracks_closed_form() {
    let region = TubularRegion::numerical(cosh_region(0.3).sigma, 0.3, GridDensity { base: 4, ..Default::default() }).unwrap();
    let opts = BarrierOptions { refine: false, ..Default::default() };
    let c = certify_barrier_with(&region, 1, default_psi_floor(0.3), &opts).unwrap();
    assert!((c.c1_raw - 2.0 * 0.3f64.tanh() / 0.3).abs() < 1e-3, "{}", c.c1_raw);
}

#[test]
fn grid_failure_is_located() {
    let region = cosh_region(0.5);
    assert!(matches!(certify_barrier(&region, 2, 0.0), Err(Error::Validation { .. })));
    // tube larger than the chart: shooting leaves the domain
    let chart = Arc::new(AmbientChart::revolution(Profile::Cosh, 0.3));
    let sigma = DiscreteImmersion::curve_from_fn(chart, 32, |t| p(&[0.0, t])).unwrap();
    let r = TubularRegion::new(sigma, 0.5, level(&[0], &[0.0]), GridDensity::default());
    assert!(matches!(r, Err(Error::AtSample { index: 0, .. })));
}

fn shared() -> &'static (TubularRegion, TubularRegion) {
    static REGIONS: OnceLock<(TubularRegion, TubularRegion)> = OnceLock::new();
    REGIONS.get_or_init(|| (cosh_region(0.5), warped_region(0.5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psi_is_nonnegative(r in -0.9f64..0.9, th in 0.0f64..TAU, x in -0.5f64..0.5, y in -0.5f64..0.5) {
        let (cosh, warped) = shared();
        let a = squared_distance(cosh, &p(&[r, th]));
        prop_assert!(a.map_or(true, |e| e.psi >= 0.0));
        let b = squared_distance(warped, &p(&[x, y, th]));
        prop_assert!(b.map_or(true, |e| e.psi >= 0.0));
    }
}
