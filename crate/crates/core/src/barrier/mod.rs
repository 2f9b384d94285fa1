//! Squared distance ψ to a reference submanifold, its covariant Hessian, and the
//! tubular estimate `tr_n ∇²ψ ≥ c₁ ψ`.

mod distance;
mod spline;

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ambient::{geodesic_shoot, AmbientChart, Point};
use crate::error::{Error, Result};
use crate::submanifold::{frames_at, DiscreteImmersion};

pub use distance::{AnalyticDistance, DistanceEval, DistanceModel, FermiProjector, Projection, PROJECTION_MAX_ITER, PROJECTION_TOL};

pub const DEFAULT_SAFETY: f64 = 0.05;
/// Relative change of the minimum ratio that triggers another grid doubling.
pub const REFINE_TRIGGER: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridDensity {
    pub base: usize,
    pub radial: usize,
    /// Directions in the normal circle when the codimension is 2.
    pub angular: usize,
}

impl Default for GridDensity {
    fn default() -> Self {
        GridDensity {
            base: 16,
            radial: 8,
            angular: 8,
        }
    }
}

impl GridDensity {
    pub fn doubled(self) -> Self {
        GridDensity {
            base: self.base * 2,
            radial: self.radial * 2,
            angular: self.angular * 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub base: usize,
    pub direction: usize,
    pub level: usize,
    /// Fermi radius the point was shot to.
    pub radius: f64,
    pub point: Vec<f64>,
}

/// Tube `U_{ε₁}` around Σ with a Fermi-style sample grid.
#[derive(Debug, Clone)]
pub struct TubularRegion {
    pub sigma: DiscreteImmersion,
    pub epsilon1: f64,
    pub model: DistanceModel,
    pub density: GridDensity,
    pub sample_grid: Vec<GridPoint>,
}

impl TubularRegion {
    pub fn new(sigma: DiscreteImmersion, epsilon1: f64, model: DistanceModel, density: GridDensity) -> Result<Self> {
        if !(epsilon1 > 0.0 && epsilon1.is_finite()) {
            return Err(Error::validation("epsilon1", format!("must be positive, got {epsilon1}")));
        }
        if density.base == 0 || density.radial < 8 || density.angular < 8 {
            return Err(Error::validation("grid", "need at least 1 base sample, 8 radial levels and 8 directions"));
        }
        if let DistanceModel::Analytic(a) = &model {
            a.validate(sigma.chart())?;
        }
        let sample_grid = fermi_grid(&sigma, epsilon1, density)?;
        Ok(TubularRegion {
            sigma,
            epsilon1,
            model,
            density,
            sample_grid,
        })
    }

    /// Same tube with the numerical projector in place of any closed form.
    pub fn numerical(sigma: DiscreteImmersion, epsilon1: f64, density: GridDensity) -> Result<Self> {
        let proj = Arc::new(FermiProjector::new(&sigma)?);
        Self::new(sigma, epsilon1, DistanceModel::Numerical(proj), density)
    }

    pub fn with_density(&self, density: GridDensity) -> Result<Self> {
        Self::new(self.sigma.clone(), self.epsilon1, self.model.clone(), density)
    }

    pub fn chart(&self) -> &AmbientChart {
        self.sigma.chart()
    }

    pub fn n(&self) -> usize {
        self.sigma.intrinsic_dim()
    }

    fn psi_raw(&self, p: &Point, guess: Option<(f64, DVector<f64>)>) -> Result<(f64, DVector<f64>, Option<Projection>)> {
        match &self.model {
            DistanceModel::Analytic(a) => {
                self.chart().check(p)?;
                let (psi, dpsi) = a.eval(self.chart(), p);
                Ok((psi, dpsi, None))
            }
            DistanceModel::Numerical(proj) => {
                let pr = proj.project(p, guess)?;
                Ok((pr.psi, pr.dpsi.clone(), Some(pr)))
            }
        }
    }
}

fn fermi_grid(sigma: &DiscreteImmersion, epsilon1: f64, density: GridDensity) -> Result<Vec<GridPoint>> {
    let chart = sigma.chart();
    let frames = frames_at(sigma)?;
    let count = sigma.len();
    let bases: Vec<usize> = if count <= density.base {
        (0..count).collect()
    } else {
        (0..density.base).map(|j| j * count / density.base).collect()
    };
    let mut grid = Vec::new();
    for &b in &bases {
        let f = &frames.frames[b];
        let dirs: Vec<DVector<f64>> = match f.m() {
            1 => vec![f.normals[0].clone(), -&f.normals[0]],
            2 => (0..density.angular)
                .map(|j| {
                    let a = std::f64::consts::TAU * j as f64 / density.angular as f64;
                    &f.normals[0] * a.cos() + &f.normals[1] * a.sin()
                })
                .collect(),
            _ => f.normals.iter().flat_map(|nu| [nu.clone(), -nu]).collect(),
        };
        for (j, dir) in dirs.iter().enumerate() {
            for level in 1..=density.radial {
                let r = epsilon1 * level as f64 / density.radial as f64;
                let path = geodesic_shoot(chart, &f.point, dir, r, None).map_err(|e| Error::at_sample(b, e))?;
                if path.exited {
                    return Err(Error::at_sample(
                        b,
                        Error::OutOfTube {
                            point: f.point.iter().copied().collect(),
                            limit: r,
                        },
                    ));
                }
                grid.push(GridPoint {
                    base: b,
                    direction: j,
                    level,
                    radius: r,
                    point: path.endpoint().iter().copied().collect(),
                });
            }
        }
    }
    Ok(grid)
}

/// ψ at `p` without the tube-radius check.
pub fn psi_at(region: &TubularRegion, p: &Point) -> Result<f64> {
    Ok(region.psi_raw(p, None)?.0)
}

/// ψ and its gradient at `p`; points farther than `2ε₁` are rejected.
pub fn squared_distance(region: &TubularRegion, p: &Point) -> Result<DistanceEval> {
    let (psi, dpsi, _) = region.psi_raw(p, None)?;
    let limit = 2.0 * region.epsilon1;
    if psi > limit * limit {
        return Err(Error::OutOfTube {
            point: p.iter().copied().collect(),
            limit,
        });
    }
    let g_inv = region.chart().metric_inverse_at(p)?;
    let gradient = &g_inv * &dpsi;
    Ok(DistanceEval { psi, dpsi, gradient })
}

#[derive(Debug, Clone)]
pub struct HessianEval {
    pub psi: f64,
    /// `∂_a ψ` by finite differences.
    pub dpsi: DVector<f64>,
    /// Covariant Hessian `∂_a∂_b ψ − Γ^c_{ab} ∂_c ψ`.
    pub hessian: DMatrix<f64>,
    /// `g⁻¹ ∇²ψ`.
    pub endomorphism: DMatrix<f64>,
    /// Eigenvalues of the endomorphism, ascending.
    pub eigenvalues: Vec<f64>,
    /// `|g E − (g E)ᵀ|_max` for the endomorphism `E`.
    pub symmetry_residual: f64,
}

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

pub fn hessian_psi(region: &TubularRegion, p: &Point) -> Result<HessianEval> {
    let chart = region.chart();
    let d = chart.dim();
    let h = chart.fd_step();
    let (psi, _, proj) = region.psi_raw(p, None)?;
    let guess = proj.map(|pr| (pr.s, pr.v));
    let at = |offset: &[(usize, f64)]| -> Result<f64> {
        let mut q = p.clone();
        for &(a, o) in offset {
            q[a] += o * h;
        }
        Ok(region.psi_raw(&chart.wrap(&q), guess.clone())?.0)
    };

    let mut first = DVector::zeros(d);
    let mut second = DMatrix::zeros(d, d);
    for a in 0..d {
        let vals: Vec<f64> = (0..5)
            .map(|k| if k == 2 { Ok(psi) } else { at(&[(a, k as f64 - 2.0)]) })
            .collect::<Result<_>>()?;
        first[a] = (0..5).map(|k| D1[k] * vals[k]).sum::<f64>() / (12.0 * h);
        second[(a, a)] = (0..5).map(|k| D2[k] * vals[k]).sum::<f64>() / (12.0 * h * h);
    }
    for a in 0..d {
        for b in a + 1..d {
            let mut acc = 0.0;
            for i in [0usize, 1, 3, 4] {
                for j in [0usize, 1, 3, 4] {
                    acc += D1[i] * D1[j] * at(&[(a, i as f64 - 2.0), (b, j as f64 - 2.0)])?;
                }
            }
            second[(a, b)] = acc / (144.0 * h * h);
            second[(b, a)] = second[(a, b)];
        }
    }

    let gamma = chart.christoffel_at(p)?;
    let hessian = DMatrix::from_fn(d, d, |a, b| second[(a, b)] - (0..d).map(|c| gamma.get(c, a, b) * first[c]).sum::<f64>());
    let g = chart.metric_at(p)?;
    let chol = g.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        point: p.iter().copied().collect(),
    })?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("metric factor is singular".into()))?;
    let sym = &l_inv * &hessian * l_inv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let endomorphism = chol.inverse() * &hessian;
    let lowered = &g * &endomorphism;
    let symmetry_residual = (&lowered - lowered.transpose()).abs().max();
    Ok(HessianEval {
        psi,
        dpsi: first,
        hessian,
        endomorphism,
        eigenvalues,
        symmetry_residual,
    })
}

/// Sum of the `n` smallest entries of an ascending eigenvalue list.
pub fn tr_n_smallest(eigenvalues: &[f64], n: usize) -> Result<f64> {
    if n == 0 || n > eigenvalues.len() {
        return Err(Error::validation("n", format!("must be in 1..={}, got {n}", eigenvalues.len())));
    }
    Ok(eigenvalues[..n].iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridEvidence {
    #[serde(flatten)]
    pub at: GridPoint,
    pub psi: f64,
    pub trn: f64,
    /// `None` below the ψ floor.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierCertificate {
    pub scenario: Option<String>,
    pub epsilon1: f64,
    pub n: usize,
    pub psi_floor: f64,
    pub safety: f64,
    /// Grid infimum of `tr_n ∇²ψ / ψ` before the safety factor.
    pub c1_raw: f64,
    pub c1: f64,
    pub verdict: BarrierVerdict,
    pub density: GridDensity,
    pub refinements: usize,
    /// True for certificates built by hand rather than from a grid.
    pub forced: bool,
    #[serde(skip)]
    pub evidence: Vec<GridEvidence>,
}

impl BarrierCertificate {
    /// Certificate with a prescribed constant, used for negative controls.
    pub fn forced(epsilon1: f64, c1: f64, n: usize) -> Self {
        BarrierCertificate {
            scenario: None,
            epsilon1,
            n,
            psi_floor: default_psi_floor(epsilon1),
            safety: 0.0,
            c1_raw: c1,
            c1,
            verdict: if c1 > 0.0 { BarrierVerdict::Pass } else { BarrierVerdict::Fail },
            density: GridDensity::default(),
            refinements: 0,
            forced: true,
            evidence: Vec::new(),
        }
    }

    pub fn with_scenario(mut self, name: &str) -> Self {
        self.scenario = Some(name.to_string());
        self
    }

    pub fn passes(&self) -> bool {
        self.verdict == BarrierVerdict::Pass
    }

    pub fn min_ratio(&self) -> Option<f64> {
        self.evidence.iter().filter_map(|e| e.ratio).reduce(f64::min)
    }

    /// One row per grid point: indices, chart coordinates, ψ, tr_n∇²ψ, ratio.
    pub fn evidence_csv(&self) -> String {
        let dim = self.evidence.first().map_or(0, |e| e.at.point.len());
        let mut out = String::from("base,direction,level,radius");
        for a in 0..dim {
            let _ = write!(out, ",x{a}");
        }
        out.push_str(",psi,trn,ratio\n");
        for e in &self.evidence {
            let _ = write!(out, "{},{},{},{:.12e}", e.at.base, e.at.direction, e.at.level, e.at.radius);
            for v in &e.at.point {
                let _ = write!(out, ",{v:.12e}");
            }
            let _ = write!(out, ",{:.12e},{:.12e},", e.psi, e.trn);
            if let Some(r) = e.ratio {
                let _ = write!(out, "{r:.12e}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn default_psi_floor(epsilon1: f64) -> f64 {
    (1e-3 * epsilon1).powi(2)
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    pub safety: f64,
    /// Further grid doublings allowed after the first comparison.
    pub max_doublings: usize,
    pub refine: bool,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            safety: DEFAULT_SAFETY,
            max_doublings: 2,
            refine: true,
        }
    }
}

fn evaluate_grid(region: &TubularRegion, n: usize, psi_floor: f64) -> Result<Vec<GridEvidence>> {
    region
        .sample_grid
        .iter()
        .enumerate()
        .map(|(k, gp)| {
            let p = DVector::from_column_slice(&gp.point);
            let eval = || -> Result<GridEvidence> {
                let h = hessian_psi(region, &p)?;
                let trn = tr_n_smallest(&h.eigenvalues, n)?;
                let ratio = (h.psi >= psi_floor).then(|| trn / h.psi);
                Ok(GridEvidence {
                    at: gp.clone(),
                    psi: h.psi,
                    trn,
                    ratio,
                })
            };
            eval().map_err(|e| Error::at_sample(k, e))
        })
        .collect()
}

fn grid_min(evidence: &[GridEvidence]) -> Result<f64> {
    evidence
        .iter()
        .filter_map(|e| e.ratio)
        .reduce(f64::min)
        .ok_or_else(|| Error::Degenerate("no grid point lies above the psi floor".into()))
}

pub fn certify_barrier(region: &TubularRegion, n: usize, psi_floor: f64) -> Result<BarrierCertificate> {
    certify_barrier_with(region, n, psi_floor, &BarrierOptions::default())
}

pub fn certify_barrier_with(
    region: &TubularRegion,
    n: usize,
    psi_floor: f64,
    opts: &BarrierOptions,
) -> Result<BarrierCertificate> {
    if n != region.n() {
        return Err(Error::validation("n", format!("must equal dim Σ = {}", region.n())));
    }
    if !(psi_floor >= 0.0) || !(0.0..1.0).contains(&opts.safety) {
        return Err(Error::validation("psi_floor", "floor must be non-negative and safety in [0, 1)"));
    }
    let mut current = region.clone();
    let mut evidence = evaluate_grid(&current, n, psi_floor)?;
    let mut min = grid_min(&evidence)?;
    let mut refinements = 0;
    if opts.refine {
        for _ in 0..=opts.max_doublings {
            let finer = current.with_density(current.density.doubled())?;
            let finer_evidence = evaluate_grid(&finer, n, psi_floor)?;
            let finer_min = grid_min(&finer_evidence)?;
            let change = (finer_min - min).abs() / min.abs().max(1e-12);
            current = finer;
            evidence = finer_evidence;
            min = finer_min;
            refinements += 1;
            if change <= REFINE_TRIGGER {
                break;
            }
        }
    }
    let c1 = min * (1.0 - opts.safety);
    Ok(BarrierCertificate {
        scenario: None,
        epsilon1: region.epsilon1,
        n,
        psi_floor,
        safety: opts.safety,
        c1_raw: min,
        c1,
        verdict: if c1 > 0.0 { BarrierVerdict::Pass } else { BarrierVerdict::Fail },
        density: current.density,
        refinements,
        forced: false,
        evidence,
    })
}
