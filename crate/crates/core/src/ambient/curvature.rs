use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::tensor::{inner, Christoffel, Riemann};
use super::{invert_spd, AmbientChart, Point};
use crate::error::{Error, Result};

/// Curvature quantities at one chart point.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub point: Point,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub gamma: Christoffel,
    pub riemann: Riemann,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSummary {
    pub point: Vec<f64>,
    pub max_abs_riemann: f64,
    pub symmetry_residual: f64,
}

impl CurvatureData {
    pub fn summary(&self) -> CurvatureSummary {
        CurvatureSummary {
            point: self.point.iter().copied().collect(),
            max_abs_riemann: self.riemann.max_abs(),
            symmetry_residual: self.riemann.symmetry_residual(),
        }
    }
}

/// Fourth-order central difference of a vector-valued map along `axis`.
fn central_diff<F>(x: &Point, axis: usize, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&Point) -> Vec<f64>,
{
    let shifted = |k: f64| {
        let mut y = x.clone();
        y[axis] += k * h;
        y
    };
    let fm2 = f(&shifted(-2.0));
    let fm1 = f(&shifted(-1.0));
    let fp1 = f(&shifted(1.0));
    let fp2 = f(&shifted(2.0));
    (0..fm2.len())
        .map(|i| (fm2[i] - 8.0 * fm1[i] + 8.0 * fp1[i] - fp2[i]) / (12.0 * h))
        .collect()
}

pub(super) fn christoffel_fd(chart: &AmbientChart, x: &Point) -> Result<Christoffel> {
    let g = chart.metric_raw(x);
    let g_inv = invert_spd(&g, x)?;
    Ok(christoffel_with_inverse(chart, x, &g_inv))
}

fn christoffel_with_inverse(chart: &AmbientChart, x: &Point, g_inv: &DMatrix<f64>) -> Christoffel {
    let d = chart.dim();
    let h = chart.fd_step();
    // dg[e][a*d + b] = ∂_e g_{ab}
    let dg: Vec<Vec<f64>> = (0..d)
        .map(|e| central_diff(x, e, h, |y| chart.metric_raw(y).as_slice().to_vec()))
        .collect();
    let dgab = |e: usize, a: usize, b: usize| dg[e][a + b * d];
    // first kind: Γ_{e,ab} = ½(∂_a g_{eb} + ∂_b g_{ea} − ∂_e g_{ab})
    let mut first = vec![0.0; d * d * d];
    for e in 0..d {
        for a in 0..d {
            for b in a..d {
                let v = 0.5 * (dgab(a, e, b) + dgab(b, e, a) - dgab(e, a, b));
                first[(e * d + a) * d + b] = v;
                first[(e * d + b) * d + a] = v;
            }
        }
    }
    let mut gamma = Christoffel::zeros(d);
    for c in 0..d {
        for a in 0..d {
            for b in a..d {
                let v: f64 = (0..d).map(|e| g_inv[(c, e)] * first[(e * d + a) * d + b]).sum();
                gamma.set(c, a, b, v);
                gamma.set(c, b, a, v);
            }
        }
    }
    gamma
}

pub(super) fn curvature_fd(chart: &AmbientChart, x: &Point) -> Result<CurvatureData> {
    let d = chart.dim();
    let h = chart.fd_step();
    let g = chart.metric_raw(x);
    let g_inv = invert_spd(&g, x)?;
    let gamma = christoffel_with_inverse(chart, x, &g_inv);

    let mut failure = None;
    // dgamma[e] holds ∂_e Γ^c_{ab} in Christoffel layout
    let dgamma: Vec<Vec<f64>> = (0..d)
        .map(|e| {
            central_diff(x, e, h, |y| match invert_spd(&chart.metric_raw(y), y) {
                Ok(inv) => christoffel_with_inverse(chart, y, &inv).as_slice().to_vec(),
                Err(err) => {
                    failure.get_or_insert(err);
                    vec![0.0; d * d * d]
                }
            })
        })
        .collect();
    if let Some(err) = failure {
        return Err(err);
    }
    let dg = |e: usize, c: usize, a: usize, b: usize| dgamma[e][(c * d + a) * d + b];

    // R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}
    let mut up = vec![0.0; d.pow(4)];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let mut v = dg(c, a, dd, b) - dg(dd, a, c, b);
                    for e in 0..d {
                        v += gamma.get(a, c, e) * gamma.get(e, dd, b) - gamma.get(a, dd, e) * gamma.get(e, c, b);
                    }
                    up[((a * d + b) * d + c) * d + dd] = v;
                }
            }
        }
    }
    let mut riemann = Riemann::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let v: f64 = (0..d).map(|e| g[(a, e)] * up[((e * d + b) * d + c) * d + dd]).sum();
                    riemann.set(a, b, c, dd, v);
                }
            }
        }
    }
    Ok(CurvatureData {
        point: x.clone(),
        g,
        g_inv,
        gamma,
        riemann,
    })
}

/// Relative tolerance below which a pair of vectors is treated as spanning no plane.
const PLANE_TOL: f64 = 1e-12;

/// `K(u, v) = R(u, v, u, v) / (|u|²|v|² − <u, v>²)`.
pub fn sectional_curvature(cdata: &CurvatureData, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let uu = inner(&cdata.g, u, u);
    let vv = inner(&cdata.g, v, v);
    let uv = inner(&cdata.g, u, v);
    let area2 = uu * vv - uv * uv;
    if !(area2 > PLANE_TOL * uu * vv) || uu == 0.0 || vv == 0.0 {
        return Err(Error::Degenerate(format!(
            "vectors span a degenerate plane (|u∧v|² = {area2:e})"
        )));
    }
    Ok(cdata.riemann.apply(u, v, u, v) / area2)
}
