//! Warping profiles for surfaces of revolution and warped products.

use serde::{Deserialize, Serialize};

/// One-variable profile `f(r)` for `g = dr² + f(r)² dθ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    Cosh,
    Sin,
    Const(f64),
}

impl Profile {
    /// Returns `(f, f', f'')` at `r`.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Cosh => (r.cosh(), r.sinh(), r.cosh()),
            Profile::Sin => (r.sin(), r.cos(), -r.sin()),
            Profile::Const(c) => (c, 0.0, 0.0),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).0
    }

    pub fn label(&self) -> String {
        match self {
            Profile::Cosh => "cosh".into(),
            Profile::Sin => "sin".into(),
            Profile::Const(c) => format!("const({c})"),
        }
    }
}

/// Partial derivatives of a two-variable profile up to second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

/// Two-variable profile `f(x, y)` for `g = dx² + dy² + f(x, y)² dθ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WarpProfile {
    /// `f = cosh(x) cosh(y)`
    CoshCosh,
    /// `f = cosh(sqrt(x² + y²))`
    CoshRadial,
}

impl WarpProfile {
    pub fn jet(&self, x: f64, y: f64) -> Jet2 {
        match *self {
            WarpProfile::CoshCosh => {
                let (cx, sx, cy, sy) = (x.cosh(), x.sinh(), y.cosh(), y.sinh());
                Jet2 {
                    f: cx * cy,
                    fx: sx * cy,
                    fy: cx * sy,
                    fxx: cx * cy,
                    fxy: sx * sy,
                    fyy: cx * cy,
                }
            }
            WarpProfile::CoshRadial => {
                // cosh(s) = F(s²) with F(t) = Σ tᵏ/(2k)!, smooth at the axis.
                let t = x * x + y * y;
                let (f0, f1, f2) = cosh_sqrt_series(t);
                Jet2 {
                    f: f0,
                    fx: 2.0 * x * f1,
                    fy: 2.0 * y * f1,
                    fxx: 2.0 * f1 + 4.0 * x * x * f2,
                    fxy: 4.0 * x * y * f2,
                    fyy: 2.0 * f1 + 4.0 * y * y * f2,
                }
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).f
    }

    pub fn label(&self) -> &'static str {
        match self {
            WarpProfile::CoshCosh => "cosh(x)cosh(y)",
            WarpProfile::CoshRadial => "cosh(|(x,y)|)",
        }
    }
}

/// `F(t) = cosh(√t)` and its first two derivatives in `t`.
fn cosh_sqrt_series(t: f64) -> (f64, f64, f64) {
    if t > 1e-4 {
        cosh_sqrt_closed(t)
    } else {
        cosh_sqrt_taylor(t)
    }
}

fn cosh_sqrt_closed(t: f64) -> (f64, f64, f64) {
    let s = t.sqrt();
    let (c, sh) = (s.cosh(), s.sinh());
    (c, sh / (2.0 * s), (c - sh / s) / (4.0 * t))
}

// Σ tᵏ/(2k)!, truncated well below double precision for t ≤ 1e-4.
fn cosh_sqrt_taylor(t: f64) -> (f64, f64, f64) {
    let f0 = 1.0 + t / 2.0 + t * t / 24.0 + t * t * t / 720.0;
    let f1 = 0.5 + t / 12.0 + t * t / 240.0 + t * t * t / 10080.0;
    let f2 = 1.0 / 12.0 + t / 120.0 + t * t / 3360.0;
    (f0, f1, f2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jet(p: WarpProfile, x: f64, y: f64) -> Jet2 {
        let h = 1e-4;
        let f = |x: f64, y: f64| p.value(x, y);
        Jet2 {
            f: f(x, y),
            fx: (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            fy: (f(x, y + h) - f(x, y - h)) / (2.0 * h),
            fxx: (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h),
            fxy: (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h),
            fyy: (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h),
        }
    }

    #[test]
    fn warp_jets_match_finite_differences() {
        for p in [WarpProfile::CoshCosh, WarpProfile::CoshRadial] {
            for &(x, y) in &[(0.0, 0.0), (0.3, -0.2), (0.005, 0.002), (-0.7, 0.4)] {
                let a = p.jet(x, y);
                let b = fd_jet(p, x, y);
                for (u, v) in [(a.fx, b.fx), (a.fy, b.fy), (a.fxx, b.fxx), (a.fxy, b.fxy), (a.fyy, b.fyy)] {
                    assert!((u - v).abs() < 1e-5, "{p:?} at ({x},{y}): {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        let below = cosh_sqrt_taylor(1e-4);
        let above = cosh_sqrt_closed(1e-4);
        assert!((below.0 - above.0).abs() < 1e-12);
        assert!((below.1 - above.1).abs() < 1e-10);
        assert!((below.2 - above.2).abs() < 1e-8);
    }
}
