//! Periodic cubic spline through the samples of a closed curve, in sample-index parameter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::submanifold::DiscreteImmersion;

#[derive(Debug, Clone)]
pub(crate) struct PeriodicSpline {
    /// Lifted samples minus the linear winding term, one row per sample.
    y: Vec<DVector<f64>>,
    /// Second derivatives at the knots.
    m: Vec<DVector<f64>>,
    /// Coordinate offset accumulated over one full traversal.
    winding: DVector<f64>,
}

impl PeriodicSpline {
    pub(crate) fn through(imm: &DiscreteImmersion) -> Result<Self> {
        let chart = imm.chart();
        let s = imm.samples();
        let n = s.len();
        let mut lifted = vec![s[0].clone()];
        for k in 1..n {
            let step = chart.displacement(&s[k - 1], &s[k]);
            lifted.push(&lifted[k - 1] + step);
        }
        let winding = &lifted[n - 1] + chart.displacement(&s[n - 1], &s[0]) - &lifted[0];
        let y: Vec<DVector<f64>> = lifted
            .iter()
            .enumerate()
            .map(|(k, x)| x - &winding * (k as f64 / n as f64))
            .collect();

        // M_{k-1} + 4 M_k + M_{k+1} = 6 (y_{k+1} - 2 y_k + y_{k-1})
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            a[(k, k)] = 4.0;
            a[(k, (k + 1) % n)] += 1.0;
            a[(k, (k + n - 1) % n)] += 1.0;
        }
        let lu = a.lu();
        let dim = chart.dim();
        let mut m = vec![DVector::zeros(dim); n];
        for c in 0..dim {
            let rhs = DVector::from_fn(n, |k, _| 6.0 * (y[(k + 1) % n][c] - 2.0 * y[k][c] + y[(k + n - 1) % n][c]));
            let sol = lu
                .solve(&rhs)
                .ok_or_else(|| Error::Degenerate("periodic spline system is singular".into()))?;
            for k in 0..n {
                m[k][c] = sol[k];
            }
        }
        Ok(PeriodicSpline { y, m, winding })
    }

    pub(crate) fn period(&self) -> f64 {
        self.y.len() as f64
    }

    /// Unwrapped position and parameter derivative at `s`.
    pub(crate) fn eval(&self, s: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.y.len();
        let base = s.floor();
        let t = s - base;
        let k = (base as i64).rem_euclid(n as i64) as usize;
        let k1 = (k + 1) % n;
        let laps = ((s - t - k as f64) / n as f64).round();
        let (y0, y1) = (&self.y[k], &self.y[k1]);
        let (m0, m1) = (&self.m[k], &self.m[k1]);
        let u = 1.0 - t;
        let pos = y0 * u + y1 * t + (m0 * (u * u * u - u) + m1 * (t * t * t - t)) / 6.0;
        let der = y1 - y0 + (m1 * (3.0 * t * t - 1.0) - m0 * (3.0 * u * u - 1.0)) / 6.0;
        let lifted = pos + &self.winding * ((k as f64 + t) / n as f64 + laps);
        (lifted, der + &self.winding / n as f64)
    }
}
