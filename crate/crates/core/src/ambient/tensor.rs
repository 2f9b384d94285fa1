use nalgebra::{DMatrix, DVector};

/// Christoffel symbols of the second kind, stored as `Γ^c_{ab}` at index `(c, a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, c: usize, a: usize, b: usize) -> usize {
        (c * self.dim + a) * self.dim + b
    }

    #[inline]
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.data[self.idx(c, a, b)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, a: usize, b: usize, value: f64) {
        let i = self.idx(c, a, b);
        self.data[i] = value;
    }

    /// `Γ(u, v)^c = Γ^c_{ab} u^a v^b`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |c, _| {
            let mut acc = 0.0;
            for a in 0..d {
                if u[a] == 0.0 {
                    continue;
                }
                for b in 0..d {
                    acc += self.get(c, a, b) * u[a] * v[b];
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Fully lowered Riemann tensor `R_{abcd}`.
///
/// Convention: `R(u, v, u, v) = R_{abcd} u^a v^b u^c v^d = <R(u, v) v, u>` with
/// `R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_[X,Y]`, so the unit round sphere has
/// sectional curvature +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim.pow(4)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, value: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = value;
    }

    /// Sets `R_{abcd}` together with every entry related to it by the pair
    /// and antisymmetry identities.
    pub fn set_with_symmetries(&mut self, a: usize, b: usize, c: usize, d: usize, value: f64) {
        for (p, q, s) in [((a, b), (c, d), 1.0), ((c, d), (a, b), 1.0)] {
            self.set(p.0, p.1, q.0, q.1, s * value);
            self.set(p.1, p.0, q.0, q.1, -s * value);
            self.set(p.0, p.1, q.1, q.0, -s * value);
            self.set(p.1, p.0, q.1, q.0, s * value);
        }
    }

    pub fn apply(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for a in 0..n {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if v[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    if w[c] == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        acc += self.get(a, b, c, d) * u[a] * v[b] * w[c] * z[d];
                    }
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest violation of the antisymmetry, pair-symmetry and first Bianchi identities.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        worst = worst
                            .max((r + self.get(b, a, c, d)).abs())
                            .max((r + self.get(a, b, d, c)).abs())
                            .max((r - self.get(c, d, a, b)).abs())
                            .max((r + self.get(a, c, d, b) + self.get(a, d, b, c)).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Metric inner product `<u, v>_g`.
#[inline]
pub fn inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += g[(a, b)] * u[a] * v[b];
        }
    }
    acc
}

#[inline]
pub fn norm(g: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    inner(g, u, u).max(0.0).sqrt()
}
