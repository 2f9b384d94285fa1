//! Sampled closed submanifolds: closed polyline curves (n = 1) and structured
//! surface grids (n = 2), with frames, second fundamental form, mean curvature
//! and volume.

mod frames;
mod resample;
pub(crate) mod stencil;

use std::sync::Arc;

use nalgebra::DVector;

use crate::ambient::{norm, AmbientChart, Point};
use crate::error::{Error, Result};

pub use frames::{frames_at, mean_curvature, second_fundamental_form, FrameField, MeanCurvature, SampleFrame};
pub use resample::{resample, spacing_deviation};

/// Layout of the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Closed curve with cyclic adjacency.
    Curve,
    /// Row-major `rows × cols` grid; `periodic[0]` wraps rows, `periodic[1]` wraps columns.
    Grid {
        rows: usize,
        cols: usize,
        periodic: [bool; 2],
    },
}

#[derive(Debug, Clone)]
pub struct DiscreteImmersion {
    chart: Arc<AmbientChart>,
    samples: Vec<Point>,
    shape: Shape,
}

impl DiscreteImmersion {
    /// A closed curve through `samples` (cyclic). Checks domain membership,
    /// distinct neighbours and discrete embeddedness.
    pub fn curve(chart: Arc<AmbientChart>, samples: Vec<Point>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Degenerate(format!("a closed curve needs at least 3 samples, got {}", samples.len())));
        }
        let imm = Self::unchecked(chart, samples, Shape::Curve)?;
        imm.check_distinct()?;
        imm.check_embedded()?;
        Ok(imm)
    }

    /// Samples `t ↦ f(t)` at `t = 2πk/count`.
    pub fn curve_from_fn(chart: Arc<AmbientChart>, count: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        let samples = (0..count)
            .map(|k| f(std::f64::consts::TAU * k as f64 / count as f64))
            .collect();
        Self::curve(chart, samples)
    }

    /// A structured surface grid, row-major.
    pub fn surface(chart: Arc<AmbientChart>, samples: Vec<Point>, rows: usize, cols: usize, periodic: [bool; 2]) -> Result<Self> {
        if samples.len() != rows * cols {
            return Err(Error::Degenerate(format!(
                "grid of {rows}×{cols} needs {} samples, got {}",
                rows * cols,
                samples.len()
            )));
        }
        for (len, per) in [(rows, periodic[0]), (cols, periodic[1])] {
            if len < 5 || (per && len < 5) {
                return Err(Error::Degenerate(format!("grid direction with {len} samples is too short for a 5-point stencil")));
            }
        }
        let imm = Self::unchecked(chart, samples, Shape::Grid { rows, cols, periodic })?;
        imm.check_distinct()?;
        Ok(imm)
    }

    fn unchecked(chart: Arc<AmbientChart>, samples: Vec<Point>, shape: Shape) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            chart.check(s).map_err(|e| Error::at_sample(i, e))?;
        }
        let samples = samples.iter().map(|s| chart.wrap(s)).collect();
        Ok(Self { chart, samples, shape })
    }

    /// Same chart and layout, new sample positions; re-validated.
    pub fn with_samples(&self, samples: Vec<Point>) -> Result<Self> {
        match self.shape {
            Shape::Curve => Self::curve(self.chart.clone(), samples),
            Shape::Grid { rows, cols, periodic } => Self::surface(self.chart.clone(), samples, rows, cols, periodic),
        }
    }

    pub fn chart(&self) -> &AmbientChart {
        &self.chart
    }

    pub fn chart_arc(&self) -> &Arc<AmbientChart> {
        &self.chart
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Intrinsic dimension `n`.
    pub fn intrinsic_dim(&self) -> usize {
        match self.shape {
            Shape::Curve => 1,
            Shape::Grid { .. } => 2,
        }
    }

    /// Codimension `m = d − n`.
    pub fn codim(&self) -> usize {
        self.chart.dim() - self.intrinsic_dim()
    }

    /// Cyclic shift of a curve's sample indices.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut samples = self.samples.clone();
        if !samples.is_empty() {
            samples.rotate_left(shift % self.samples.len());
        }
        Self {
            chart: self.chart.clone(),
            samples,
            shape: self.shape,
        }
    }

    pub(crate) fn next(&self, k: usize) -> usize {
        (k + 1) % self.samples.len()
    }

    pub(crate) fn prev(&self, k: usize) -> usize {
        (k + self.samples.len() - 1) % self.samples.len()
    }

    /// Trapezoidal metric length of the segment from sample `k` to its successor.
    pub fn segment_length(&self, k: usize) -> Result<f64> {
        let (a, b) = (&self.samples[k], &self.samples[self.next(k)]);
        let d = self.chart.displacement(a, b);
        let ga = self.chart.metric_at(a)?;
        let gb = self.chart.metric_at(b)?;
        Ok(0.5 * (norm(&ga, &d) + norm(&gb, &d)))
    }

    pub fn segment_lengths(&self) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| self.segment_length(k)).collect()
    }

    fn check_distinct(&self) -> Result<()> {
        let tol = 1e-14 * self.chart.length_scale();
        let pairs: Vec<(usize, usize)> = match self.shape {
            Shape::Curve => (0..self.len()).map(|k| (k, self.next(k))).collect(),
            Shape::Grid { rows, cols, periodic } => {
                let mut v = Vec::new();
                for i in 0..rows {
                    for j in 0..cols {
                        if j + 1 < cols || periodic[1] {
                            v.push((i * cols + j, i * cols + (j + 1) % cols));
                        }
                        if i + 1 < rows || periodic[0] {
                            v.push((i * cols + j, ((i + 1) % rows) * cols + j));
                        }
                    }
                }
                v
            }
        };
        for (a, b) in pairs {
            if self.chart.displacement(&self.samples[a], &self.samples[b]).norm() <= tol {
                return Err(Error::Degenerate(format!("samples {a} and {b} coincide")));
            }
        }
        Ok(())
    }

    /// O(N²) test that no two non-adjacent segments of a curve meet.
    ///
    /// Distances are measured in the chart coordinates rescaled by the metric at
    /// the first segment's start; segments closer than `1e-6` of the mean spacing
    /// count as intersecting.
    pub fn check_embedded(&self) -> Result<()> {
        if self.shape != Shape::Curve {
            return Ok(());
        }
        let n = self.len();
        if n < 4 {
            return Ok(());
        }
        let steps: Vec<DVector<f64>> = (0..n)
            .map(|k| self.chart.displacement(&self.samples[k], &self.samples[self.next(k)]))
            .collect();
        let mean = steps.iter().map(|s| s.norm()).sum::<f64>() / n as f64;
        let tol = 1e-6 * mean;
        for i in 0..n {
            let a = &self.samples[i];
            let chol = match self.chart.metric_at(a)?.cholesky() {
                Some(c) => c.l().transpose(),
                None => return Err(Error::NotPositiveDefinite { point: a.iter().copied().collect() }),
            };
            let di = &chol * &steps[i];
            let reach = di.norm();
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let offset = self.chart.displacement(a, &self.samples[j]);
                let b0 = &chol * &offset;
                let dj = &chol * &steps[j];
                if b0.norm() > reach + dj.norm() + tol {
                    continue;
                }
                if segment_distance(&di, &b0, &dj) < tol {
                    return Err(Error::SelfIntersection { first: i, second: j });
                }
            }
        }
        Ok(())
    }
}

/// Distance between segments `[0, d1]` and `[b, b + d2]`.
fn segment_distance(d1: &DVector<f64>, b: &DVector<f64>, d2: &DVector<f64>) -> f64 {
    let a = d1.dot(d1);
    let e = d2.dot(d2);
    let f = -d2.dot(b);
    let c = -d1.dot(b);
    let bb = d1.dot(d2);
    let denom = a * e - bb * bb;
    let (mut s, mut t);
    if denom > 1e-14 * a * e {
        s = ((bb * f - c * e) / denom).clamp(0.0, 1.0);
    } else {
        s = 0.0;
    }
    // t minimizes |s d1 - (b + t d2)|
    t = (bb * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((bb - c) / a).clamp(0.0, 1.0);
    }
    (d1 * s - b - d2 * t).norm()
}

/// Metric length (n = 1) or area (n = 2) by the trapezoidal rule on the induced metric.
///
/// Curves integrate `|x'(t)|_g` over the sample index with the periodic
/// trapezoidal rule, `x'` from the five-point centered stencil. Per-sample
/// speeds are summed in sorted order, so the result is exactly invariant under
/// cyclic reindexing.
pub fn volume(imm: &DiscreteImmersion) -> Result<f64> {
    let mut w = volume_weights(imm)?;
    w.sort_by(f64::total_cmp);
    Ok(w.iter().sum())
}

/// Quadrature weight of each sample: the metric speed for curves, the trapezoid
/// weight times `sqrt(EG − F²)` for grids.
pub fn volume_weights(imm: &DiscreteImmersion) -> Result<Vec<f64>> {
    match imm.shape() {
        Shape::Curve => curve_speeds(imm),
        Shape::Grid { rows, cols, periodic } => {
            let mut out = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for j in 0..cols {
                    let (xu, xv) = frames::grid_first_derivatives(imm, i, j);
                    let g = imm.chart().metric_at(&imm.samples()[i * cols + j])?;
                    let e = crate::ambient::inner(&g, &xu, &xu);
                    let f = crate::ambient::inner(&g, &xu, &xv);
                    let gg = crate::ambient::inner(&g, &xv, &xv);
                    let w = trapezoid_weight(i, rows, periodic[0]) * trapezoid_weight(j, cols, periodic[1]);
                    out.push(w * (e * gg - f * f).max(0.0).sqrt());
                }
            }
            Ok(out)
        }
    }
}

/// `|x'_k|_g` with `x'` from the five-point periodic stencil in the sample index.
pub fn curve_speeds(imm: &DiscreteImmersion) -> Result<Vec<f64>> {
    let chart = imm.chart();
    let s = imm.samples();
    let n = s.len();
    (0..n)
        .map(|k| {
            let at = |o: isize| chart.displacement(&s[k], &s[(k as isize + o).rem_euclid(n as isize) as usize]);
            let d = (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) / 12.0;
            Ok(norm(&chart.metric_at(&s[k])?, &d))
        })
        .collect()
}

fn trapezoid_weight(i: usize, n: usize, periodic: bool) -> f64 {
    if !periodic && (i == 0 || i + 1 == n) {
        0.5
    } else {
        1.0
    }
}
