//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_3, LN_2, TAU};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mcflab_core::ambient::{sectional_curvature, AmbientChart, Point, Profile, WarpProfile};
use mcflab_core::barrier::{certify_barrier, default_psi_floor, BarrierCertificate, GridDensity, TubularRegion};
use mcflab_core::flow::{
    barrier_monotone_check, dissipation_check, run, trapping_check, uniqueness_search, FlowParams, FlowTarget, FlowTrace,
    Outcome,
};
use mcflab_core::lab::{find, neck_c1, Scenario};
use mcflab_core::stability::{certify_strong_stability, StabilityCertificate, DEFAULT_MARGIN};
use mcflab_core::submanifold::DiscreteImmersion;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pass flag and a one-line summary of the measured values.
type Verdict = (bool, String);

fn p(v: &[f64]) -> Point {
    DVector::from_column_slice(v)
}

fn e(d: usize, i: usize) -> Point {
    DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })
}

fn within(limit: Duration, t: Instant, label: &str, notes: &mut Vec<String>) -> bool {
    let el = t.elapsed();
    notes.push(format!("{label} {:.1}s", el.as_secs_f64()));
    el < limit
}

struct Setup {
    scenario: Scenario,
    region: TubularRegion,
    cert: BarrierCertificate,
}

fn setup(name: &str) -> Setup {
    let scenario = find(name).unwrap();
    let geom = scenario.geometry().unwrap();
    let eps = scenario.default_epsilon1;
    let region = TubularRegion::new(geom.sigma, eps, geom.model.unwrap(), GridDensity::default()).unwrap();
    let cert = certify_barrier(&region, 1, default_psi_floor(eps)).unwrap();
    Setup { scenario, region, cert }
}

fn circle(n: usize, rho: f64) -> DiscreteImmersion {
    DiscreteImmersion::curve_from_fn(Arc::new(AmbientChart::flat(2, 4.0)), n, |t| p(&[rho * t.cos(), rho * t.sin()])).unwrap()
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> Point>;
    let presets: Vec<(&str, AmbientChart, Sampler)> = vec![
        ("flat", AmbientChart::flat(3, 2.0), Box::new(|r| p(&[r.gen_range(-1.9..1.9), r.gen_range(-1.9..1.9), r.gen_range(-1.9..1.9)]))),
        ("sphere", AmbientChart::round_sphere(), Box::new(|r| p(&[r.gen_range(0.2..2.9), r.gen_range(0.0..TAU)]))),
        ("cosh", AmbientChart::revolution(Profile::Cosh, 3.0), Box::new(|r| p(&[r.gen_range(-2.0..2.0), r.gen_range(0.0..TAU)]))),
        (
            "warped3d",
            AmbientChart::warped3d(WarpProfile::CoshCosh, 2.0),
            Box::new(|r| p(&[r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5), r.gen_range(0.0..TAU)])),
        ),
        (
            "eguchi-hanson",
            AmbientChart::eguchi_hanson(1.0, 1.5),
            Box::new(|r| p(&[r.gen_range(0.2..2.9), r.gen_range(0.0..TAU), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])),
        ),
        (
            "flat-torus",
            AmbientChart::flat_torus(2),
            Box::new(|r| p(&[r.gen_range(0.0..TAU), r.gen_range(0.0..TAU)])),
        ),
    ];
    let mut worst_sym = 0.0f64;
    let mut worst_k = 0.0f64;
    for (name, chart, sample) in &presets {
        for _ in 0..100 {
            let x = sample(&mut rng);
            let c = chart.riemann_at(&x).unwrap();
            let scale = c.riemann.max_abs();
            let rel = if scale > 1e-10 { c.riemann.symmetry_residual() / scale } else { c.riemann.symmetry_residual() };
            worst_sym = worst_sym.max(rel);
            let oracle = match *name {
                "sphere" => Some(1.0),
                "cosh" => Some(-1.0),
                _ => None,
            };
            if let Some(k) = oracle {
                let got = sectional_curvature(&c, &e(2, 0), &e(2, 1)).unwrap();
                worst_k = worst_k.max((got - k).abs());
            }
        }
    }
    let warped = AmbientChart::warped3d(WarpProfile::CoshCosh, 2.0);
    let c = warped.riemann_at(&p(&[0.0, 0.0, 0.0])).unwrap();
    for i in 0..2 {
        worst_k = worst_k.max((sectional_curvature(&c, &e(3, 2), &e(3, i)).unwrap() + 1.0).abs());
    }
    let mut notes = vec![format!("max relative symmetry/Bianchi residual {worst_sym:.2e}, max |K − K_exact| {worst_k:.2e}")];
    let fast = within(Duration::from_secs(10), t0, "runtime", &mut notes);
    (worst_sym < 1e-6 && worst_k < 1e-6 && fast, notes.join("; "))
}

fn criterion_2() -> Verdict {
    let t0 = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let cert = |name: &str| -> StabilityCertificate {
        let geom = find(name).unwrap().geometry().unwrap();
        let parts: Vec<_> = std::iter::once(&geom.sigma)
            .chain(&geom.extra_patches)
            .map(|imm| certify_strong_stability(imm, DEFAULT_MARGIN).unwrap())
            .collect();
        StabilityCertificate::merge(parts).unwrap()
    };
    for (name, c0, tol, pass) in [
        ("cosh-neck", 1.0, 1e-3, true),
        ("sphere-equator", -1.0, 1e-3, false),
        ("flat-torus-geodesic", 0.0, 1e-6, false),
        ("warped3d-neck", 1.0, 1e-2, true),
    ] {
        let c = cert(name);
        let good = (c.c0 - c0).abs() <= tol && c.passes() == pass;
        ok &= good;
        notes.push(format!("{name} c0={:.6} {}", c.c0, if c.passes() { "pass" } else { "fail" }));
    }
    let table: Vec<f64> = common::eguchi_hanson_table()
        .into_iter()
        .filter(|r| r.kind == "stability_eigenvalue")
        .map(|r| r.value)
        .collect();
    let eh = cert("eguchi-hanson-zero-section");
    let min_eig = eh.samples.iter().map(|s| s.eigenvalues[0]).fold(f64::INFINITY, f64::min);
    let dev = eh
        .samples
        .iter()
        .flat_map(|s| s.eigenvalues.iter())
        .flat_map(|ev| table.iter().map(move |t| (ev - t).abs()))
        .fold(0.0, f64::max);
    ok &= !table.is_empty() && min_eig > 0.0 && dev < 1e-3 && eh.passes();
    notes.push(format!(
        "eguchi-hanson {} samples, min eigenvalue {min_eig:.6}, max table deviation {dev:.2e}",
        eh.samples.len()
    ));
    ok &= within(Duration::from_secs(60), t0, "runtime", &mut notes);
    (ok, notes.join("; "))
}

fn criterion_3() -> Verdict {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    let geom = find("cosh-neck").unwrap().geometry().unwrap();
    let c1 = |eps: f64| {
        let region = TubularRegion::new(geom.sigma.clone(), eps, geom.model.clone().unwrap(), GridDensity::default()).unwrap();
        certify_barrier(&region, 1, default_psi_floor(eps)).unwrap().c1_raw
    };
    let (c_half, c_tenth, c_small) = (c1(0.5), c1(0.1), c1(0.05));
    let richardson = (4.0 * c_small - c_tenth) / 3.0;
    let mut ok = (c_half - 1.848).abs() <= 1e-2;
    ok &= (c_small - neck_c1(0.05)).abs() <= 1e-6;
    ok &= (richardson - 2.0).abs() <= 1e-3;
    notes.push(format!(
        "c1(0.5)={c_half:.6}; c1(0.05)={c_small:.6} (closed form {:.6}, raw gap to 2 {:.2e}); limit estimate {richardson:.6}",
        neck_c1(0.05),
        2.0 - c_small
    ));
    let eq = find("sphere-equator").unwrap().geometry().unwrap();
    for eps in [0.1, 0.2, 0.3] {
        let region = TubularRegion::new(eq.sigma.clone(), eps, eq.model.clone().unwrap(), GridDensity::default()).unwrap();
        let cert = certify_barrier(&region, 1, default_psi_floor(eps)).unwrap();
        ok &= !cert.passes();
        notes.push(format!("equator ε1={eps} {}", if cert.passes() { "pass" } else { "fail" }));
    }
    ok &= within(Duration::from_secs(60), t0, "runtime", &mut notes);
    (ok, notes.join("; "))
}

fn criterion_4() -> Verdict {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    let extinction = |imm: &DiscreteImmersion, s: f64| {
        let params = FlowParams {
            dt_safety: s,
            ..Default::default()
        };
        let tr = run(imm, None, &params).unwrap();
        (tr.outcome == Outcome::Extinct, tr.extinction_time.unwrap_or(f64::NAN))
    };
    let (ext_c, t_c) = extinction(&circle(64, 1.0), 0.2);
    let lat = DiscreteImmersion::curve_from_fn(Arc::new(AmbientChart::round_sphere()), 64, |t| p(&[FRAC_PI_3, t])).unwrap();
    let (ext_l, t_l) = extinction(&lat, 0.2);
    let semi = (1.0 + (TAU / 64.0).cos()) / 4.0;
    let (_, t_half) = extinction(&circle(64, 1.0), 0.1);
    let ratio = (t_c - semi) / (t_half - semi);
    let ok = ext_c
        && ext_l
        && (t_c - 0.5).abs() <= 0.02 * 0.5
        && (t_l - LN_2).abs() <= 0.02 * LN_2
        && (1.5..=2.5).contains(&ratio);
    notes.push(format!("circle T={t_c:.6}; latitude T={t_l:.6} (ln 2 = {LN_2:.6})"));
    notes.push(format!("dt-halving error ratio {ratio:.3} against the semi-discrete time {semi:.6}"));
    let fast = within(Duration::from_secs(60), t0, "runtime", &mut notes);
    (ok && fast, notes.join("; "))
}

struct NeckRun {
    name: &'static str,
    trace: FlowTrace,
    c1: f64,
    ok: bool,
    note: String,
}

fn neck_run(name: &'static str) -> NeckRun {
    let t0 = Instant::now();
    let s = setup(name);
    let geom = s.scenario.geometry().unwrap();
    let imm0 = s.scenario.initial(&geom, 0.3).unwrap();
    let target = FlowTarget {
        region: &s.region,
        cert: &s.cert,
    };
    let trace = run(&imm0, Some(target), &FlowParams::default()).unwrap();
    let trap = trapping_check(&trace, &s.cert, 0.05);
    let mono = barrier_monotone_check(&trace, &s.cert, 1e-4);
    let last = trace.last();
    let rate = trap.fitted_rate.unwrap_or(f64::NAN);
    let ok = trap.violations == 0
        && rate >= s.cert.c1
        && mono.max_increment < 1e-4
        && trace.outcome == Outcome::Converged
        && last.hausdorff < 1e-3
        && last.sup_h < 1e-3
        && (0.99..=1.01).contains(&last.mass_ratio);
    let elapsed = t0.elapsed();
    let note = format!(
        "{name}: {} in {} steps, trapping violations {}, fitted rate {rate:.3} vs c1 {:.3}, max v increment {:.1e}, Hausdorff {:.1e}, sup|H| {:.1e}, mass ratio {:.5}, {:.1}s",
        trace.outcome.label(),
        trace.steps,
        trap.violations,
        s.cert.c1,
        mono.max_increment,
        last.hausdorff,
        last.sup_h,
        last.mass_ratio,
        elapsed.as_secs_f64()
    );
    NeckRun {
        name,
        c1: s.cert.c1,
        ok: ok && elapsed < Duration::from_secs(120),
        trace,
        note,
    }
}

fn criterion_6(runs: &[NeckRun]) -> Verdict {
    let params = FlowParams {
        t_end: 0.25,
        ..Default::default()
    };
    let tr = run(&circle(128, 1.0), None, &params).unwrap();
    let exact = TAU * (1.0 - 0.5f64.sqrt());
    let (first, last) = (&tr.records[0], tr.last());
    let dl = last.volume - first.volume;
    let rel_dl = (dl + exact).abs() / exact;
    let rel_d = (last.dissipation - exact).abs() / exact;
    let res = dissipation_check(&tr);
    let mut ok = (last.t - 0.25).abs() < 1e-12 && rel_dl < 1e-2 && rel_d < 1e-2 && res < 1e-2;
    let mut notes = vec![format!(
        "circle Δlength {dl:.5} (exact −{exact:.5}), ∫∫|H|² {:.5}, residual {res:.1e}",
        last.dissipation
    )];
    for r in runs.iter().filter(|r| r.trace.outcome == Outcome::Converged) {
        let res = dissipation_check(&r.trace);
        ok &= res < 1e-2;
        notes.push(format!("{} residual {res:.1e}", r.name));
    }
    (ok, notes.join("; "))
}

fn criterion_7() -> Verdict {
    let t0 = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let params = FlowParams::default();
    for (name, forced, want) in [("cosh-neck", false, 20), ("warped3d-neck", false, 20), ("sphere-equator", true, 0)] {
        let scenario = find(name).unwrap();
        let geom = scenario.geometry().unwrap();
        let eps = scenario.default_epsilon1;
        let region = TubularRegion::new(geom.sigma.clone(), eps, geom.model.clone().unwrap(), GridDensity::default()).unwrap();
        let cert = if forced {
            BarrierCertificate::forced(eps, 0.1, 1)
        } else {
            certify_barrier(&region, 1, default_psi_floor(eps)).unwrap()
        };
        let perturb = |rng: &mut ChaCha8Rng| scenario.perturbation(&geom, eps, rng);
        let report = uniqueness_search(
            FlowTarget {
                region: &region,
                cert: &cert,
            },
            &perturb,
            20,
            0,
            &params,
        )
        .unwrap();
        let good = report.converged_to_sigma == want && report.stabilized_elsewhere.is_empty() && report.failed == 0;
        ok &= good;
        let mut outcomes = std::collections::BTreeMap::new();
        for r in &report.results {
            *outcomes.entry(r.outcome.map_or("error", |o| o.label())).or_insert(0) += 1;
        }
        notes.push(format!("{name} {}/20 converged {outcomes:?}", report.converged_to_sigma));
    }
    ok &= within(Duration::from_secs(300), t0, "runtime", &mut notes);
    (ok, notes.join("; "))
}

fn criterion_8(runs: &[NeckRun]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let again = neck_run(r.name);
        let same = again.trace.to_csv().into_bytes() == r.trace.to_csv().into_bytes() && again.c1 == r.c1;
        ok &= same;
        notes.push(format!(
            "{} {} ({} rows)",
            r.name,
            if same { "identical" } else { "differs" },
            r.trace.records.len()
        ));
    }
    (ok, notes.join("; "))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut report = |n: u32, title: &'static str, r: Verdict| {
        println!("{} criterion {n} ({title}): {}", if r.0 { "PASS" } else { "FAIL" }, r.1);
        results.push((n, title, r));
    };
    report(1, "curvature kernel", criterion_1());
    report(2, "strong stability", criterion_2());
    report(3, "barrier certificate", criterion_3());
    report(4, "flow oracles", criterion_4());
    let runs = vec![neck_run("cosh-neck"), neck_run("warped3d-neck")];
    let ok5 = runs.iter().all(|r| r.ok);
    report(
        5,
        "dynamical stability",
        (ok5, runs.iter().map(|r| r.note.clone()).collect::<Vec<_>>().join("; ")),
    );
    report(6, "dissipation", criterion_6(&runs));
    report(7, "local uniqueness", criterion_7());
    report(8, "determinism", criterion_8(&runs));
    let failed: Vec<u32> = results.iter().filter(|r| !r.2 .0).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
