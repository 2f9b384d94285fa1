use nalgebra::{DMatrix, DVector};

use super::stencil::stencil;
use super::{DiscreteImmersion, Shape};
use crate::ambient::{inner, norm, Christoffel, Point};
use crate::error::{Error, Result};

/// Orthonormal frames and extrinsic data at one sample.
#[derive(Debug, Clone)]
pub struct SampleFrame {
    pub point: Point,
    pub g: DMatrix<f64>,
    pub gamma: Christoffel,
    /// `∂_a x` with respect to the sample index (one per intrinsic direction).
    pub coord_tangents: Vec<DVector<f64>>,
    /// `e_i = Σ_a E[(i, a)] ∂_a x`.
    pub tangent_coeffs: DMatrix<f64>,
    pub tangents: Vec<DVector<f64>>,
    pub normals: Vec<DVector<f64>>,
    /// `∂_a ∂_b x` in index parameters, row-major `(a, b)`.
    coord_second: Vec<DVector<f64>>,
    /// `h_{αij}` at `(α * n + i) * n + j`; empty until filled.
    h: Vec<f64>,
}

impl SampleFrame {
    pub fn n(&self) -> usize {
        self.tangents.len()
    }

    pub fn m(&self) -> usize {
        self.normals.len()
    }

    pub fn has_h(&self) -> bool {
        !self.h.is_empty()
    }

    pub fn h(&self, alpha: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.h[(alpha * n + i) * n + j]
    }

    /// Replaces the normal frame by `ν'_α = Σ_β q[(α, β)] ν_β` for orthogonal `q`,
    /// transforming `h` accordingly.
    pub fn rotate_normals(&mut self, q: &DMatrix<f64>) {
        let (n, m) = (self.n(), self.m());
        let normals = (0..m)
            .map(|a| (0..m).fold(DVector::zeros(self.point.len()), |acc, b| acc + &self.normals[b] * q[(a, b)]))
            .collect();
        if self.has_h() {
            let mut h = vec![0.0; m * n * n];
            for a in 0..m {
                for i in 0..n {
                    for j in 0..n {
                        h[(a * n + i) * n + j] = (0..m).map(|b| q[(a, b)] * self.h(b, i, j)).sum();
                    }
                }
            }
            self.h = h;
        }
        self.normals = normals;
    }
}

#[derive(Debug, Clone)]
pub struct FrameField {
    pub n: usize,
    pub m: usize,
    pub frames: Vec<SampleFrame>,
}

impl FrameField {
    /// Largest deviation of `[e | ν]` from a g-orthonormal system.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in &self.frames {
            let all: Vec<&DVector<f64>> = f.tangents.iter().chain(f.normals.iter()).collect();
            for (a, u) in all.iter().enumerate() {
                for (b, v) in all.iter().enumerate() {
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((inner(&f.g, u, v) - target).abs());
                }
            }
        }
        worst
    }

    pub fn h_symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in self.frames.iter().filter(|f| f.has_h()) {
            for a in 0..self.m {
                for i in 0..self.n {
                    for j in 0..self.n {
                        worst = worst.max((f.h(a, i, j) - f.h(a, j, i)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Mean curvature at one sample: normal components `H^α = Σ_i h_{αii}` and the
/// coordinate vector `Σ_α H^α ν_α`.
#[derive(Debug, Clone)]
pub struct MeanCurvature {
    pub normal: DVector<f64>,
    pub vector: DVector<f64>,
    pub norm: f64,
}

pub(crate) fn grid_first_derivatives(imm: &DiscreteImmersion, i: usize, j: usize) -> (DVector<f64>, DVector<f64>) {
    let d = grid_derivatives(imm, i, j, false);
    (d.0[0].clone(), d.0[1].clone())
}

/// First (and optionally second) index-parameter derivatives on a grid.
fn grid_derivatives(imm: &DiscreteImmersion, i: usize, j: usize, second: bool) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let Shape::Grid { rows, cols, periodic } = imm.shape() else {
        unreachable!("grid derivatives on a curve")
    };
    let chart = imm.chart();
    let samples = imm.samples();
    let center = &samples[i * cols + j];
    let at = |di: isize, dj: isize| {
        let r = (i as isize + di).rem_euclid(rows as isize) as usize;
        let c = (j as isize + dj).rem_euclid(cols as isize) as usize;
        chart.displacement(center, &samples[r * cols + c])
    };
    let su1 = stencil(1, i, rows, periodic[0]);
    let sv1 = stencil(1, j, cols, periodic[1]);
    let combine = |s: &[(isize, f64)], along_rows: bool| {
        s.iter().fold(DVector::zeros(center.len()), |acc, &(o, w)| {
            acc + if along_rows { at(o, 0) } else { at(0, o) } * w
        })
    };
    let xu = combine(&su1, true);
    let xv = combine(&sv1, false);
    if !second {
        return (vec![xu, xv], Vec::new());
    }
    let xuu = combine(&stencil(2, i, rows, periodic[0]), true);
    let xvv = combine(&stencil(2, j, cols, periodic[1]), false);
    let mut xuv = DVector::zeros(center.len());
    for &(ou, wu) in &su1 {
        for &(ov, wv) in &sv1 {
            xuv += at(ou, ov) * (wu * wv);
        }
    }
    (vec![xu, xv], vec![xuu, xuv.clone(), xuv, xvv])
}

fn curve_derivatives(imm: &DiscreteImmersion, k: usize) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let chart = imm.chart();
    let s = imm.samples();
    let (prev, next) = (&s[imm.prev(k)], &s[imm.next(k)]);
    let fwd = chart.displacement(&s[k], next);
    let bwd = chart.displacement(&s[k], prev);
    let first = (&fwd - &bwd) * 0.5;
    let second = fwd + bwd;
    (vec![first], vec![second])
}

/// Metric Gram–Schmidt step: `v` minus its components along `basis`.
fn project_out(g: &DMatrix<f64>, v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut w = v.clone();
    // two passes keep orthogonality at roundoff level
    for _ in 0..2 {
        for b in basis {
            let c = inner(g, &w, b);
            w -= b * c;
        }
    }
    w
}

/// Minimum fraction of a candidate's length that must survive projection for it
/// to seed a normal vector.
const SEED_ACCEPT: f64 = 0.25;

fn complete_normals(
    g: &DMatrix<f64>,
    tangents: &[DVector<f64>],
    m: usize,
    previous: Option<&[DVector<f64>]>,
) -> Option<Vec<DVector<f64>>> {
    let d = g.nrows();
    let coordinate = (0..d).map(|a| DVector::from_fn(d, |i, _| if i == a { 1.0 } else { 0.0 }));
    let candidates: Vec<DVector<f64>> = previous.into_iter().flatten().cloned().chain(coordinate).collect();
    let mut normals: Vec<DVector<f64>> = Vec::with_capacity(m);
    for c in candidates {
        if normals.len() == m {
            break;
        }
        let len = norm(g, &c);
        if len == 0.0 {
            continue;
        }
        let basis: Vec<DVector<f64>> = tangents.iter().chain(normals.iter()).cloned().collect();
        let w = project_out(g, &c, &basis);
        let wl = norm(g, &w);
        if wl > SEED_ACCEPT * len {
            normals.push(w / wl);
        }
    }
    (normals.len() == m).then_some(normals)
}

/// Orthonormal tangent and normal frames at every sample.
///
/// Normal frames start from the coordinate basis at the first sample and are
/// then propagated: each sample re-orthonormalizes its predecessor's normals,
/// falling back to the coordinate basis when that degenerates.
pub fn frames_at(imm: &DiscreteImmersion) -> Result<FrameField> {
    let chart = imm.chart();
    let n = imm.intrinsic_dim();
    let d = chart.dim();
    if d <= n {
        return Err(Error::Degenerate(format!("codimension must be positive (n = {n}, d = {d})")));
    }
    let m = d - n;
    let order: Vec<(usize, Option<usize>)> = match imm.shape() {
        Shape::Curve => (0..imm.len()).map(|k| (k, k.checked_sub(1))).collect(),
        Shape::Grid { rows, cols, .. } => (0..rows)
            .flat_map(|i| {
                (0..cols).map(move |j| {
                    let prev = if j > 0 {
                        Some(i * cols + j - 1)
                    } else if i > 0 {
                        Some((i - 1) * cols)
                    } else {
                        None
                    };
                    (i * cols + j, prev)
                })
            })
            .collect(),
    };

    let mut slots: Vec<Option<SampleFrame>> = vec![None; imm.len()];
    for (k, prev) in order {
        let x = &imm.samples()[k];
        let frame = (|| -> Result<SampleFrame> {
            let g = chart.metric_at(x)?;
            let gamma = chart.christoffel_at(x)?;
            let (first, second) = match imm.shape() {
                Shape::Curve => curve_derivatives(imm, k),
                Shape::Grid { cols, .. } => grid_derivatives(imm, k / cols, k % cols, true),
            };
            // Gram–Schmidt on the coordinate tangents, tracking coefficients
            let mut tangents: Vec<DVector<f64>> = Vec::with_capacity(n);
            let mut coeffs = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                let mut w = first[a].clone();
                let mut row = DVector::<f64>::zeros(n);
                row[a] = 1.0;
                for b in 0..a {
                    let c = inner(&g, &w, &tangents[b]);
                    w -= &tangents[b] * c;
                    row -= coeffs.row(b).transpose() * c;
                }
                let len = norm(&g, &w);
                if !(len > 0.0) {
                    return Err(Error::Degenerate("tangent vectors are linearly dependent".into()));
                }
                coeffs.set_row(a, &(row / len).transpose());
                tangents.push(w / len);
            }
            let previous = prev.and_then(|p| slots[p].as_ref()).map(|f| f.normals.as_slice());
            let normals = complete_normals(&g, &tangents, m, previous).ok_or(Error::Frame { index: k })?;
            Ok(SampleFrame {
                point: x.clone(),
                g,
                gamma,
                coord_tangents: first,
                tangent_coeffs: coeffs,
                tangents,
                normals,
                coord_second: second,
                h: Vec::new(),
            })
        })()
        .map_err(|e| match e {
            Error::Frame { .. } => e,
            other => Error::at_sample(k, other),
        })?;
        slots[k] = Some(frame);
    }
    Ok(FrameField {
        n,
        m,
        frames: slots.into_iter().map(|f| f.expect("every sample visited")).collect(),
    })
}

/// Fills `h_{αij} = <∇_{e_i} e_j, ν_α>` from the coordinate second derivatives
/// plus the Christoffel correction.
pub fn second_fundamental_form(_imm: &DiscreteImmersion, frames: &FrameField) -> Result<FrameField> {
    let (n, m) = (frames.n, frames.m);
    let mut out = frames.clone();
    for f in out.frames.iter_mut() {
        // II_{ab} = ∂_a∂_b x + Γ(∂_a x, ∂_b x)
        let second: Vec<DVector<f64>> = (0..n * n)
            .map(|ab| {
                let (a, b) = (ab / n, ab % n);
                &f.coord_second[ab] + f.gamma.contract(&f.coord_tangents[a], &f.coord_tangents[b])
            })
            .collect();
        let mut h = vec![0.0; m * n * n];
        for alpha in 0..m {
            let proj: Vec<f64> = second.iter().map(|v| inner(&f.g, v, &f.normals[alpha])).collect();
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            acc += f.tangent_coeffs[(i, a)] * f.tangent_coeffs[(j, b)] * proj[a * n + b];
                        }
                    }
                    h[(alpha * n + i) * n + j] = acc;
                }
            }
        }
        f.h = h;
    }
    Ok(out)
}

pub fn mean_curvature(_imm: &DiscreteImmersion, frames: &FrameField) -> Result<Vec<MeanCurvature>> {
    frames
        .frames
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if !f.has_h() {
                return Err(Error::at_sample(k, Error::Degenerate("second fundamental form not computed".into())));
            }
            let normal = DVector::from_fn(frames.m, |a, _| (0..frames.n).map(|i| f.h(a, i, i)).sum());
            let vector = (0..frames.m).fold(DVector::zeros(f.point.len()), |acc, a| acc + &f.normals[a] * normal[a]);
            let norm = normal.norm();
            Ok(MeanCurvature { normal, vector, norm })
        })
        .collect()
}

impl FrameField {
    /// Frames, second fundamental form and mean curvature in one pass.
    pub fn compute(imm: &DiscreteImmersion) -> Result<(FrameField, Vec<MeanCurvature>)> {
        let frames = second_fundamental_form(imm, &frames_at(imm)?)?;
        let h = mean_curvature(imm, &frames)?;
        Ok((frames, h))
    }
}
