//! Chart-based Riemannian geometry: metric, Christoffel symbols, Riemann
//! tensor, sectional curvature and geodesics on a single coordinate domain.
//!
//! All derived tensors are computed from metric evaluations by fourth-order
//! central differences with step `1e-3 * length_scale`. Presets also carry
//! closed-form evaluators in [`analytic`], which the test-suite uses as oracles.

pub mod analytic;
mod curvature;
mod geodesic;
mod profile;
mod tensor;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use curvature::{sectional_curvature, CurvatureData};
pub use geodesic::{geodesic_shoot, GeodesicPath, GEODESIC_STEP};
pub use profile::{Jet2, Profile, WarpProfile};
pub use tensor::{inner, norm, Christoffel, Riemann};

pub type Point = DVector<f64>;

/// Relative differencing step for metric derivatives.
pub const FD_STEP: f64 = 1e-3;

/// Bounded axes accept points this far (times `length_scale`) past their ends,
/// so integrators that land on a boundary within roundoff are not rejected.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Bounded { lo: f64, hi: f64 },
    Periodic { origin: f64, period: f64 },
}

impl Axis {
    pub fn periodic(period: f64) -> Self {
        Axis::Periodic { origin: 0.0, period }
    }

    pub fn bounded(lo: f64, hi: f64) -> Self {
        Axis::Bounded { lo, hi }
    }

    fn wrap(&self, x: f64) -> f64 {
        match *self {
            Axis::Bounded { .. } => x,
            Axis::Periodic { origin, period } => {
                let y = (x - origin).rem_euclid(period);
                // rem_euclid may round up to exactly `period`
                if y >= period {
                    origin
                } else {
                    origin + y
                }
            }
        }
    }

    pub(crate) fn delta(&self, from: f64, to: f64) -> f64 {
        match *self {
            Axis::Bounded { .. } => to - from,
            Axis::Periodic { period, .. } => {
                let d = (to - from).rem_euclid(period);
                if d >= 0.5 * period {
                    d - period
                } else {
                    d
                }
            }
        }
    }
}

/// User-supplied metric evaluator. Receives canonical (wrapped) coordinates.
#[derive(Clone)]
pub struct CustomMetric {
    pub name: String,
    pub eval: Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>,
}

impl fmt::Debug for CustomMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMetric").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum MetricKind {
    Flat,
    /// Unit round sphere in coordinates `(θ, φ)`.
    RoundSphere,
    /// `dr² + f(r)² dθ²` in coordinates `(r, θ)`.
    Revolution(Profile),
    /// `dx² + dy² + f(x, y)² dθ²` in coordinates `(x, y, θ)`.
    Warped3d(WarpProfile),
    /// Eguchi–Hanson metric with bolt parameter `a`, coordinates `(θ, φ, X, Y)`.
    ///
    /// With `q = X² + Y²` and `ρ² = sqrt(a⁴ + 4a²q)`:
    /// `g = ρ²/4 (dθ² + sin²θ dφ²) + a²/ρ² (dX² + dY² + 2 cosθ dφ (X dY − Y dX) + q cos²θ dφ²)`.
    /// The zero section `{X = Y = 0}` is the bolt, a round 2-sphere of radius `a/2`.
    EguchiHanson { a: f64 },
    /// Riemannian product; `split` is the dimension of the first factor.
    Product {
        first: Box<MetricKind>,
        second: Box<MetricKind>,
        split: usize,
    },
    Custom(CustomMetric),
}

impl MetricKind {
    pub fn label(&self) -> String {
        match self {
            MetricKind::Flat => "flat".into(),
            MetricKind::RoundSphere => "round-sphere".into(),
            MetricKind::Revolution(p) => format!("surface-of-revolution({})", p.label()),
            MetricKind::Warped3d(p) => format!("warped-3d({})", p.label()),
            MetricKind::EguchiHanson { a } => format!("eguchi-hanson(a={a})"),
            MetricKind::Product { first, second, .. } => {
                format!("product({}, {})", first.label(), second.label())
            }
            MetricKind::Custom(c) => format!("custom({})", c.name),
        }
    }

    fn eval(&self, x: &[f64], dim: usize) -> DMatrix<f64> {
        match self {
            MetricKind::Flat => DMatrix::identity(dim, dim),
            MetricKind::RoundSphere => {
                let s = x[0].sin();
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, s * s]))
            }
            MetricKind::Revolution(p) => {
                let f = p.value(x[0]);
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, f * f]))
            }
            MetricKind::Warped3d(p) => {
                let f = p.value(x[0], x[1]);
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, f * f]))
            }
            MetricKind::EguchiHanson { a } => eguchi_hanson_metric(*a, x),
            MetricKind::Product { first, second, split } => {
                let g1 = first.eval(&x[..*split], *split);
                let g2 = second.eval(&x[*split..], dim - split);
                let mut g = DMatrix::zeros(dim, dim);
                g.view_mut((0, 0), (*split, *split)).copy_from(&g1);
                g.view_mut((*split, *split), (dim - split, dim - split)).copy_from(&g2);
                g
            }
            MetricKind::Custom(c) => (c.eval)(&DVector::from_column_slice(x)),
        }
    }
}

fn eguchi_hanson_metric(a: f64, x: &[f64]) -> DMatrix<f64> {
    let (th, px, py) = (x[0], x[2], x[3]);
    let q = px * px + py * py;
    let rho2 = (a.powi(4) + 4.0 * a * a * q).sqrt();
    let f = a * a / rho2;
    let (s, c) = th.sin_cos();
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 0)] = rho2 / 4.0;
    g[(1, 1)] = rho2 / 4.0 * s * s + f * q * c * c;
    g[(2, 2)] = f;
    g[(3, 3)] = f;
    g[(1, 3)] = f * c * px;
    g[(3, 1)] = g[(1, 3)];
    g[(1, 2)] = -f * c * py;
    g[(2, 1)] = g[(1, 2)];
    g
}

/// A coordinate domain with a smooth metric field. Immutable after construction.
#[derive(Debug, Clone)]
pub struct AmbientChart {
    axes: Vec<Axis>,
    kind: MetricKind,
    length_scale: f64,
}

impl AmbientChart {
    pub fn new(axes: Vec<Axis>, kind: MetricKind, length_scale: f64) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("chart needs at least one axis".into()));
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::Config(format!("length_scale must be positive, got {length_scale}")));
        }
        for (i, axis) in axes.iter().enumerate() {
            match *axis {
                Axis::Bounded { lo, hi } if !(lo < hi) => {
                    return Err(Error::Config(format!("axis {i}: empty interval [{lo}, {hi}]")))
                }
                Axis::Periodic { period, .. } if !(period > 0.0) => {
                    return Err(Error::Config(format!("axis {i}: period must be positive")))
                }
                _ => {}
            }
        }
        let expected = match &kind {
            MetricKind::RoundSphere | MetricKind::Revolution(_) => Some(2),
            MetricKind::Warped3d(_) => Some(3),
            MetricKind::EguchiHanson { .. } => Some(4),
            MetricKind::Product { split, .. } if *split == 0 || *split >= axes.len() => {
                return Err(Error::Config("product split must leave both factors non-empty".into()))
            }
            _ => None,
        };
        if let Some(d) = expected {
            if axes.len() != d {
                return Err(Error::Config(format!(
                    "{} needs {d} axes, got {}",
                    kind.label(),
                    axes.len()
                )));
            }
        }
        Ok(Self {
            axes,
            kind,
            length_scale,
        })
    }

    /// Euclidean space on the box `[-extent, extent]^dim`.
    pub fn flat(dim: usize, extent: f64) -> Self {
        Self::new(vec![Axis::bounded(-extent, extent); dim], MetricKind::Flat, 1.0).expect("valid flat chart")
    }

    /// Flat torus `R^dim / (2π Z)^dim`.
    pub fn flat_torus(dim: usize) -> Self {
        Self::new(vec![Axis::periodic(std::f64::consts::TAU); dim], MetricKind::Flat, 1.0)
            .expect("valid torus chart")
    }

    /// Unit sphere in `(θ, φ)`, `θ ∈ [0, π]`, `φ` periodic.
    pub fn round_sphere() -> Self {
        Self::new(
            vec![
                Axis::bounded(0.0, std::f64::consts::PI),
                Axis::periodic(std::f64::consts::TAU),
            ],
            MetricKind::RoundSphere,
            1.0,
        )
        .expect("valid sphere chart")
    }

    /// Surface of revolution `dr² + f(r)² dθ²` with `r ∈ [-extent, extent]`.
    pub fn revolution(profile: Profile, extent: f64) -> Self {
        Self::new(
            vec![Axis::bounded(-extent, extent), Axis::periodic(std::f64::consts::TAU)],
            MetricKind::Revolution(profile),
            1.0,
        )
        .expect("valid surface of revolution")
    }

    pub fn warped3d(profile: WarpProfile, extent: f64) -> Self {
        Self::new(
            vec![
                Axis::bounded(-extent, extent),
                Axis::bounded(-extent, extent),
                Axis::periodic(std::f64::consts::TAU),
            ],
            MetricKind::Warped3d(profile),
            1.0,
        )
        .expect("valid warped chart")
    }

    /// Eguchi–Hanson chart over the bolt minus its two coordinate poles, with
    /// fiber coordinates in `[-extent, extent]²`.
    pub fn eguchi_hanson(a: f64, extent: f64) -> Self {
        Self::new(
            vec![
                Axis::bounded(0.0, std::f64::consts::PI),
                Axis::periodic(std::f64::consts::TAU),
                Axis::bounded(-extent, extent),
                Axis::bounded(-extent, extent),
            ],
            MetricKind::EguchiHanson { a },
            a,
        )
        .expect("valid Eguchi-Hanson chart")
    }

    pub fn product(first: &AmbientChart, second: &AmbientChart) -> Self {
        let mut axes = first.axes.clone();
        axes.extend_from_slice(&second.axes);
        Self::new(
            axes,
            MetricKind::Product {
                first: Box::new(first.kind.clone()),
                second: Box::new(second.kind.clone()),
                split: first.dim(),
            },
            first.length_scale.min(second.length_scale),
        )
        .expect("valid product chart")
    }

    pub fn custom(axes: Vec<Axis>, metric: CustomMetric, length_scale: f64) -> Result<Self> {
        Self::new(axes, MetricKind::Custom(metric), length_scale)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Differencing step used for all metric derivatives.
    pub fn fd_step(&self) -> f64 {
        FD_STEP * self.length_scale
    }

    pub fn contains(&self, x: &Point) -> bool {
        let slack = BOUNDARY_SLACK * self.length_scale;
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && self.axes.iter().zip(x.iter()).all(|(axis, &v)| match *axis {
                Axis::Bounded { lo, hi } => v >= lo - slack && v <= hi + slack,
                Axis::Periodic { .. } => true,
            })
    }

    pub(crate) fn check(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                point: x.iter().copied().collect(),
            })
        }
    }

    /// Canonical representative: periodic coordinates reduced into `[origin, origin + period)`.
    pub fn wrap(&self, x: &Point) -> Point {
        DVector::from_iterator(self.dim(), self.axes.iter().zip(x.iter()).map(|(a, &v)| a.wrap(v)))
    }

    /// Coordinate displacement `to - from`, taking the short way around periodic axes.
    pub fn displacement(&self, from: &Point, to: &Point) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.axes
                .iter()
                .zip(from.iter().zip(to.iter()))
                .map(|(a, (&p, &q))| a.delta(p, q)),
        )
    }

    /// Metric matrix without domain or definiteness checks.
    pub(crate) fn metric_raw(&self, x: &Point) -> DMatrix<f64> {
        let w = self.wrap(x);
        self.kind.eval(w.as_slice(), self.dim())
    }

    /// `g(x)`: symmetric positive definite metric at a point of the domain.
    pub fn metric_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let g = self.metric_raw(x);
        let symmetric = (0..self.dim())
            .all(|a| (0..a).all(|b| (g[(a, b)] - g[(b, a)]).abs() <= 1e-12 * (1.0 + g[(a, b)].abs())));
        if !symmetric || g.iter().any(|v| !v.is_finite()) || g.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite {
                point: x.iter().copied().collect(),
            });
        }
        Ok(g)
    }

    pub fn metric_inverse_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        let g = self.metric_at(x)?;
        invert_spd(&g, x)
    }

    /// `Γ^c_{ab}` from fourth-order central differences of the metric.
    pub fn christoffel_at(&self, x: &Point) -> Result<Christoffel> {
        self.check(x)?;
        self.check_step(x)?;
        curvature::christoffel_fd(self, x)
    }

    /// Full curvature data at `x` (metric, Christoffels, lowered Riemann tensor).
    pub fn riemann_at(&self, x: &Point) -> Result<CurvatureData> {
        self.check(x)?;
        self.check_step(x)?;
        curvature::curvature_fd(self, x)
    }

    fn check_step(&self, x: &Point) -> Result<()> {
        let h = self.fd_step();
        for (i, &v) in x.iter().enumerate() {
            if v + h == v || v - h == v {
                return Err(Error::Config(format!(
                    "differencing step {h:e} underflows at coordinate {i} = {v:e}; increase length_scale"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn invert_spd(g: &DMatrix<f64>, x: &Point) -> Result<DMatrix<f64>> {
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::NotPositiveDefinite {
            point: x.iter().copied().collect(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    #[test]
    fn flat_metric_is_identity() {
        let chart = AmbientChart::flat(2, 5.0);
        let g = chart.metric_at(&p(&[0.3, -1.2])).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
    }

    #[test]
    fn sphere_metric_at_pi_over_three() {
        let g = AmbientChart::round_sphere().metric_at(&p(&[PI / 3.0, 0.2])).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 0.75).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn cosh_revolution_metric() {
        let g = AmbientChart::revolution(Profile::Cosh, 3.0)
            .metric_at(&p(&[0.5, 1.0]))
            .unwrap();
        assert!((g[(1, 1)] - 1.27154).abs() < 1e-5);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let chart = AmbientChart::flat(2, 1.0);
        assert!(matches!(chart.metric_at(&p(&[2.0, 0.0])), Err(Error::Domain { .. })));
        assert!(matches!(chart.christoffel_at(&p(&[0.0, -1.5])), Err(Error::Domain { .. })));
    }

    #[test]
    fn indefinite_custom_metric_fails_validation() {
        let metric = CustomMetric {
            name: "lorentz".into(),
            eval: Arc::new(|_x: &Point| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))),
        };
        let chart = AmbientChart::custom(vec![Axis::bounded(-1.0, 1.0); 2], metric, 1.0).unwrap();
        assert!(matches!(
            chart.metric_at(&p(&[0.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn periodic_coordinates_wrap() {
        let chart = AmbientChart::round_sphere();
        let a = chart.riemann_at(&p(&[1.0, 0.4])).unwrap();
        let b = chart.riemann_at(&p(&[1.0, 0.4 + TAU])).unwrap();
        for (x, y) in a.riemann.as_slice().iter().zip(b.riemann.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
        let d = chart.displacement(&p(&[1.0, 6.2]), &p(&[1.0, 0.1]));
        assert!((d[1] - (0.1 + TAU - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn step_underflow_is_a_configuration_error() {
        let chart = AmbientChart::new(vec![Axis::bounded(-1e30, 1e30); 2], MetricKind::Flat, 1e-10).unwrap();
        assert!(matches!(chart.riemann_at(&p(&[1e20, 0.0])), Err(Error::Config(_))));
    }

    #[test]
    fn constructor_validation() {
        assert!(AmbientChart::new(vec![Axis::bounded(1.0, 0.0)], MetricKind::Flat, 1.0).is_err());
        assert!(AmbientChart::new(vec![Axis::bounded(0.0, 1.0)], MetricKind::RoundSphere, 1.0).is_err());
        assert!(AmbientChart::new(vec![Axis::bounded(0.0, 1.0)], MetricKind::Flat, 0.0).is_err());
    }
}
