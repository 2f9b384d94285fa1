//! Closed-form Christoffel symbols and curvature for the presets that have them.
//!
//! These are independent of the finite-difference path and serve as its oracle.

use super::tensor::{Christoffel, Riemann};
use super::{AmbientChart, MetricKind, Point};

pub fn christoffel(chart: &AmbientChart, x: &Point) -> Option<Christoffel> {
    let x = chart.wrap(x);
    christoffel_kind(chart.kind(), x.as_slice(), chart.dim())
}

pub fn riemann(chart: &AmbientChart, x: &Point) -> Option<Riemann> {
    let x = chart.wrap(x);
    riemann_kind(chart.kind(), x.as_slice(), chart.dim())
}

fn christoffel_kind(kind: &MetricKind, x: &[f64], dim: usize) -> Option<Christoffel> {
    let mut gm = Christoffel::zeros(dim);
    match kind {
        MetricKind::Flat => {}
        MetricKind::RoundSphere => {
            let (s, c) = x[0].sin_cos();
            gm.set(0, 1, 1, -s * c);
            gm.set(1, 0, 1, c / s);
            gm.set(1, 1, 0, c / s);
        }
        MetricKind::Revolution(p) => {
            let (f, f1, _) = p.jet(x[0]);
            gm.set(0, 1, 1, -f * f1);
            gm.set(1, 0, 1, f1 / f);
            gm.set(1, 1, 0, f1 / f);
        }
        MetricKind::Warped3d(p) => {
            let j = p.jet(x[0], x[1]);
            gm.set(0, 2, 2, -j.f * j.fx);
            gm.set(1, 2, 2, -j.f * j.fy);
            gm.set(2, 0, 2, j.fx / j.f);
            gm.set(2, 2, 0, j.fx / j.f);
            gm.set(2, 1, 2, j.fy / j.f);
            gm.set(2, 2, 1, j.fy / j.f);
        }
        MetricKind::Product { first, second, split } => {
            let a = christoffel_kind(first, &x[..*split], *split)?;
            let b = christoffel_kind(second, &x[*split..], dim - split)?;
            for c in 0..*split {
                for i in 0..*split {
                    for j in 0..*split {
                        gm.set(c, i, j, a.get(c, i, j));
                    }
                }
            }
            let n2 = dim - split;
            for c in 0..n2 {
                for i in 0..n2 {
                    for j in 0..n2 {
                        gm.set(split + c, split + i, split + j, b.get(c, i, j));
                    }
                }
            }
        }
        MetricKind::EguchiHanson { .. } | MetricKind::Custom(_) => return None,
    }
    Some(gm)
}

fn riemann_kind(kind: &MetricKind, x: &[f64], dim: usize) -> Option<Riemann> {
    let mut r = Riemann::zeros(dim);
    match kind {
        MetricKind::Flat => {}
        MetricKind::RoundSphere => {
            let s = x[0].sin();
            r.set_with_symmetries(0, 1, 0, 1, s * s);
        }
        MetricKind::Revolution(p) => {
            let (f, _, f2) = p.jet(x[0]);
            r.set_with_symmetries(0, 1, 0, 1, -f * f2);
        }
        MetricKind::Warped3d(p) => {
            // flat base: only R_{iθjθ} = −f ∂_i∂_j f survives
            let j = p.jet(x[0], x[1]);
            let hess = [[j.fxx, j.fxy], [j.fxy, j.fyy]];
            for i in 0..2 {
                for k in 0..2 {
                    let v = -j.f * hess[i][k];
                    r.set(i, 2, k, 2, v);
                    r.set(2, i, 2, k, v);
                    r.set(i, 2, 2, k, -v);
                    r.set(2, i, k, 2, -v);
                }
            }
        }
        MetricKind::Product { first, second, split } => {
            let a = riemann_kind(first, &x[..*split], *split)?;
            let b = riemann_kind(second, &x[*split..], dim - split)?;
            let s = *split;
            for i in 0..s {
                for j in 0..s {
                    for k in 0..s {
                        for l in 0..s {
                            r.set(i, j, k, l, a.get(i, j, k, l));
                        }
                    }
                }
            }
            let n2 = dim - s;
            for i in 0..n2 {
                for j in 0..n2 {
                    for k in 0..n2 {
                        for l in 0..n2 {
                            r.set(s + i, s + j, s + k, s + l, b.get(i, j, k, l));
                        }
                    }
                }
            }
        }
        MetricKind::EguchiHanson { .. } | MetricKind::Custom(_) => return None,
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{Profile, WarpProfile};
    use nalgebra::DVector;

    #[test]
    fn analytic_tensors_satisfy_symmetries() {
        let charts = [
            AmbientChart::round_sphere(),
            AmbientChart::revolution(Profile::Cosh, 2.0),
            AmbientChart::warped3d(WarpProfile::CoshCosh, 2.0),
            AmbientChart::product(&AmbientChart::round_sphere(), &AmbientChart::flat(1, 1.0)),
        ];
        for chart in &charts {
            let x = DVector::from_fn(chart.dim(), |i, _| 0.3 + 0.2 * i as f64);
            let r = riemann(chart, &x).unwrap();
            assert!(r.symmetry_residual() < 1e-14, "{:?}", chart.kind());
        }
    }

    #[test]
    fn eguchi_hanson_has_no_closed_form_here() {
        let chart = AmbientChart::eguchi_hanson(1.0, 1.0);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(christoffel(&chart, &x).is_none());
        assert!(riemann(&chart, &x).is_none());
    }
}
