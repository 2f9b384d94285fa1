use nalgebra::DVector;

use super::{AmbientChart, Point};
use crate::error::Result;

/// Default RK4 step, in units of the chart length scale.
pub const GEODESIC_STEP: f64 = 5e-3;

#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub velocities: Vec<DVector<f64>>,
    /// Set when the path left the chart domain before `T`; the path is truncated there.
    pub exited: bool,
}

impl GeodesicPath {
    pub fn endpoint(&self) -> &Point {
        self.points.last().expect("path has at least the start point")
    }

    pub fn end_velocity(&self) -> &DVector<f64> {
        self.velocities.last().expect("path has at least the start velocity")
    }
}

/// Solves `γ'' + Γ(γ', γ') = 0` from `(x, v)` up to time `t_end` with classical RK4.
///
/// `max_step` defaults to [`GEODESIC_STEP`] × length scale; the step is shrunk so that
/// an integer number of steps lands exactly on `t_end`.
pub fn geodesic_shoot(
    chart: &AmbientChart,
    x: &Point,
    v: &DVector<f64>,
    t_end: f64,
    max_step: Option<f64>,
) -> Result<GeodesicPath> {
    chart.check(x)?;
    let h_max = max_step.unwrap_or(GEODESIC_STEP * chart.length_scale());
    let steps = ((t_end.abs() / h_max).ceil() as usize).max(1);
    let h = t_end / steps as f64;

    let accel = |p: &Point, w: &DVector<f64>| -> Result<DVector<f64>> {
        let gamma = chart.christoffel_at(p)?;
        Ok(-gamma.contract(w, w))
    };

    let mut path = GeodesicPath {
        times: vec![0.0],
        points: vec![chart.wrap(x)],
        velocities: vec![v.clone()],
        exited: false,
    };
    let (mut p, mut w) = (x.clone(), v.clone());
    for k in 0..steps {
        let stage = (|| -> Result<(Point, DVector<f64>)> {
            let k1x = w.clone();
            let k1v = accel(&p, &w)?;
            let p2 = &p + &k1x * (0.5 * h);
            let w2 = &w + &k1v * (0.5 * h);
            let k2v = accel(&p2, &w2)?;
            let p3 = &p + &w2 * (0.5 * h);
            let w3 = &w + &k2v * (0.5 * h);
            let k3v = accel(&p3, &w3)?;
            let p4 = &p + &w3 * h;
            let w4 = &w + &k3v * h;
            let k4v = accel(&p4, &w4)?;
            let pn = &p + (&k1x + &w2 * 2.0 + &w3 * 2.0 + &w4) * (h / 6.0);
            let wn = &w + (&k1v + &k2v * 2.0 + &k3v * 2.0 + &k4v) * (h / 6.0);
            Ok((pn, wn))
        })();
        match stage {
            Ok((pn, wn)) if chart.contains(&pn) => {
                p = chart.wrap(&pn);
                w = wn;
                path.times.push(h * (k + 1) as f64);
                path.points.push(p.clone());
                path.velocities.push(w.clone());
            }
            _ => {
                path.exited = true;
                break;
            }
        }
    }
    Ok(path)
}
