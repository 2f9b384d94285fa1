use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spline::PeriodicSpline;
use crate::ambient::{geodesic_shoot, inner, AmbientChart, Point};
use crate::error::{Error, Result};
use crate::submanifold::{DiscreteImmersion, Shape};

pub const PROJECTION_TOL: f64 = 1e-8;
pub const PROJECTION_MAX_ITER: usize = 50;
/// Geodesic step used inside the projector, in units of the chart length scale.
const SHOOT_STEP: f64 = 0.05;

/// Closed-form squared distance for reference submanifolds that are coordinate
/// level sets or round circles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticDistance {
    /// `ψ = Σ_{a ∈ axes} (x_a − level_a)²` (displacements taken the short way on periodic axes).
    /// Exact when the listed coordinates are Fermi distance coordinates for Σ.
    CoordinateLevel { axes: Vec<usize>, levels: Vec<f64> },
    /// `ψ = (|x − c| − ρ)²` for a round circle in a flat plane.
    PlanarCircle { center: [f64; 2], radius: f64 },
}

#[derive(Debug, Clone)]
pub enum DistanceModel {
    Analytic(AnalyticDistance),
    Numerical(Arc<FermiProjector>),
}

/// ψ with both its differential `∂_a ψ` and the metric gradient `g^{ab} ∂_b ψ`.
#[derive(Debug, Clone)]
pub struct DistanceEval {
    pub psi: f64,
    pub dpsi: DVector<f64>,
    pub gradient: DVector<f64>,
}

impl AnalyticDistance {
    pub(crate) fn validate(&self, chart: &AmbientChart) -> Result<()> {
        match self {
            AnalyticDistance::CoordinateLevel { axes, levels } => {
                if axes.is_empty() || axes.len() != levels.len() || axes.iter().any(|&a| a >= chart.dim()) {
                    return Err(Error::validation("distance", "axes and levels must match and index chart axes"));
                }
            }
            AnalyticDistance::PlanarCircle { radius, .. } => {
                if chart.dim() != 2 || !(*radius > 0.0) {
                    return Err(Error::validation("distance", "planar circle needs a 2d chart and positive radius"));
                }
            }
        }
        Ok(())
    }

    /// `(ψ, ∂ψ)` in closed form.
    pub fn eval(&self, chart: &AmbientChart, p: &Point) -> (f64, DVector<f64>) {
        let d = chart.dim();
        match self {
            AnalyticDistance::CoordinateLevel { axes, levels } => {
                let mut anchor = p.clone();
                for (&a, &l) in axes.iter().zip(levels) {
                    anchor[a] = l;
                }
                let delta = chart.displacement(&anchor, p);
                let mut dpsi = DVector::zeros(d);
                let mut psi = 0.0;
                for &a in axes {
                    psi += delta[a] * delta[a];
                    dpsi[a] = 2.0 * delta[a];
                }
                (psi, dpsi)
            }
            AnalyticDistance::PlanarCircle { center, radius } => {
                let (x, y) = (p[0] - center[0], p[1] - center[1]);
                let r = x.hypot(y);
                let s = r - radius;
                let dpsi = if r > 0.0 {
                    DVector::from_vec(vec![2.0 * s * x / r, 2.0 * s * y / r])
                } else {
                    DVector::zeros(2)
                };
                (s * s, dpsi)
            }
        }
    }
}

/// Foot-point data of a projection onto Σ.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Spline parameter of the foot point (sample-index units).
    pub s: f64,
    /// Initial velocity of the geodesic from the foot to the point, before normal projection.
    pub v: DVector<f64>,
    pub psi: f64,
    pub dpsi: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Squared distance to a closed curve by solving `exp_{σ(s)}(P_s v) = p` for `(s, v)`.
///
/// `σ` is a periodic cubic spline through the samples and `P_s` the g-orthogonal
/// projection onto the normal space at `σ(s)`. The system has one more unknown than
/// equations; damped Gauss–Newton with minimum-norm steps resolves it.
#[derive(Debug, Clone)]
pub struct FermiProjector {
    chart: Arc<AmbientChart>,
    spline: PeriodicSpline,
    samples: Vec<Point>,
    pub tol: f64,
    pub max_iter: usize,
}

impl FermiProjector {
    pub fn new(sigma: &DiscreteImmersion) -> Result<Self> {
        if sigma.shape() != Shape::Curve {
            return Err(Error::Degenerate("numerical distance is implemented for curves".into()));
        }
        Ok(FermiProjector {
            chart: sigma.chart_arc().clone(),
            spline: PeriodicSpline::through(sigma)?,
            samples: sigma.samples().to_vec(),
            tol: PROJECTION_TOL,
            max_iter: PROJECTION_MAX_ITER,
        })
    }

    fn normal_part(&self, g: &DMatrix<f64>, tangent: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v - tangent * (inner(g, v, tangent) / inner(g, tangent, tangent))
    }

    /// Endpoint of the normal geodesic, its end velocity and the metric length² of the start velocity.
    fn shoot(&self, s: f64, v: &DVector<f64>) -> Result<(Point, DVector<f64>, f64)> {
        let chart = &*self.chart;
        let (pos, tangent) = self.spline.eval(s);
        let base = chart.wrap(&pos);
        let g = chart.metric_at(&base)?;
        let w = self.normal_part(&g, &tangent, v);
        let len2 = inner(&g, &w, &w);
        let path = geodesic_shoot(chart, &base, &w, 1.0, Some(SHOOT_STEP * chart.length_scale()))?;
        if path.exited {
            return Err(Error::Distance {
                point: base.iter().copied().collect(),
                detail: "normal geodesic left the chart".into(),
            });
        }
        Ok((path.endpoint().clone(), path.end_velocity().clone(), len2))
    }

    fn residual(&self, p: &Point, s: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        let (end, _, _) = self.shoot(s, v)?;
        Ok(self.chart.displacement(p, &end))
    }

    pub fn initial_guess(&self, p: &Point) -> (f64, DVector<f64>) {
        let chart = &*self.chart;
        let nearest = (0..self.samples.len())
            .min_by(|&a, &b| {
                let da = chart.displacement(&self.samples[a], p).norm();
                let db = chart.displacement(&self.samples[b], p).norm();
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        (nearest as f64, chart.displacement(&self.samples[nearest], p))
    }

    pub fn project(&self, p: &Point, guess: Option<(f64, DVector<f64>)>) -> Result<Projection> {
        self.chart.check(p)?;
        let d = self.chart.dim();
        let (mut s, mut v) = guess.unwrap_or_else(|| self.initial_guess(p));
        let mut r = self.residual(p, s, &v)?;
        let mut iterations = 0;
        let fd = 1e-6 * self.chart.length_scale();
        while iterations < self.max_iter {
            let err = r.amax();
            if err < 1e-3 * self.tol {
                break;
            }
            iterations += 1;
            // Jacobian columns: ∂/∂s then ∂/∂v_c
            let mut jac = DMatrix::zeros(d, d + 1);
            let ds = fd / self.chart.length_scale();
            let col = (self.residual(p, s + ds, &v)? - self.residual(p, s - ds, &v)?) / (2.0 * ds);
            jac.set_column(0, &col);
            for c in 0..d {
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[c] += fd;
                vm[c] -= fd;
                let col = (self.residual(p, s, &vp)? - self.residual(p, s, &vm)?) / (2.0 * fd);
                jac.set_column(c + 1, &col);
            }
            let step = jac
                .svd(true, true)
                .solve(&(-&r), 1e-12)
                .map_err(|e| self.failure(p, format!("least-squares step failed: {e}")))?;
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-4 {
                let s_new = s + lambda * step[0];
                let v_new = &v + step.rows(1, d) * lambda;
                if let Ok(r_new) = self.residual(p, s_new, &v_new) {
                    if r_new.amax() < err {
                        s = s_new;
                        v = v_new;
                        r = r_new;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let residual = r.amax();
        if residual > self.tol {
            return Err(self.failure(p, format!("residual {residual:e} after {iterations} iterations")));
        }
        let (end, end_vel, len2) = self.shoot(s, &v)?;
        let g_end = self.chart.metric_at(&end)?;
        let n = self.spline.period();
        Ok(Projection {
            s: s.rem_euclid(n),
            v,
            psi: len2,
            dpsi: &g_end * end_vel * 2.0,
            iterations,
            residual,
        })
    }

    fn failure(&self, p: &Point, detail: String) -> Error {
        Error::Distance {
            point: p.iter().copied().collect(),
            detail,
        }
    }
}
