//! Pointwise strong-stability operator `S = −𝓡 − 𝓐` on the normal bundle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambient::{inner, CurvatureData};
use crate::error::{Error, Result};
use crate::submanifold::{second_fundamental_form, frames_at, DiscreteImmersion, FrameField, SampleFrame, Shape};

pub const DEFAULT_MARGIN: f64 = 1e-4;

/// `𝓡_{αβ} = Σ_i R(e_i, ν_α, e_i, ν_β)`.
pub fn partial_ricci(cdata: &CurvatureData, frame: &SampleFrame) -> DMatrix<f64> {
    let m = frame.m();
    DMatrix::from_fn(m, m, |a, b| {
        frame
            .tangents
            .iter()
            .map(|e| cdata.riemann.apply(e, &frame.normals[a], e, &frame.normals[b]))
            .sum()
    })
}

/// `𝓐_{αβ} = Σ_{ij} h_{αij} h_{βij}`.
pub fn shape_quadratic(frame: &SampleFrame) -> Result<DMatrix<f64>> {
    if !frame.has_h() {
        return Err(Error::Degenerate("second fundamental form not computed".into()));
    }
    let (n, m) = (frame.n(), frame.m());
    Ok(DMatrix::from_fn(m, m, |a, b| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += frame.h(a, i, j) * frame.h(b, i, j);
            }
        }
        acc
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVerdict {
    StronglyStable,
    NotStronglyStable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleStability {
    /// Which sampled patch the point came from (0 unless certificates were merged).
    pub patch: usize,
    pub index: usize,
    pub point: Vec<f64>,
    /// Row-major `m × m`.
    pub matrix: Vec<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub scenario: Option<String>,
    pub margin: f64,
    pub c0: f64,
    pub verdict: StabilityVerdict,
    pub samples: Vec<SampleStability>,
}

impl StabilityCertificate {
    fn assemble(samples: Vec<SampleStability>, margin: f64) -> Self {
        let c0 = samples.iter().map(|s| s.eigenvalues[0]).fold(f64::INFINITY, f64::min);
        StabilityCertificate {
            scenario: None,
            margin,
            c0,
            verdict: verdict_for(c0, margin),
            samples,
        }
    }

    /// Combines certificates of several patches covering one submanifold.
    pub fn merge(parts: Vec<StabilityCertificate>) -> Result<Self> {
        let Some(margin) = parts.first().map(|c| c.margin) else {
            return Err(Error::Degenerate("no certificates to merge".into()));
        };
        let samples = parts
            .into_iter()
            .enumerate()
            .flat_map(|(p, c)| c.samples.into_iter().map(move |s| SampleStability { patch: p, ..s }))
            .collect();
        Ok(Self::assemble(samples, margin))
    }

    pub fn with_scenario(mut self, name: &str) -> Self {
        self.scenario = Some(name.to_string());
        self
    }

    pub fn passes(&self) -> bool {
        self.verdict == StabilityVerdict::StronglyStable
    }

    pub fn matrix(&self, k: usize) -> DMatrix<f64> {
        let m = self.samples[k].eigenvalues.len();
        DMatrix::from_row_slice(m, m, &self.samples[k].matrix)
    }

    /// Largest `|S_{αβ} − S_{βα}|` over samples.
    pub fn symmetry_residual(&self) -> f64 {
        (0..self.samples.len())
            .map(|k| {
                let s = self.matrix(k);
                (&s - s.transpose()).abs().max()
            })
            .fold(0.0, f64::max)
    }
}

pub fn verdict_for(c0: f64, margin: f64) -> StabilityVerdict {
    if c0 > margin {
        StabilityVerdict::StronglyStable
    } else {
        StabilityVerdict::NotStronglyStable
    }
}

pub(crate) fn sorted_symmetric_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    let sym = (s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `S = −𝓡 − 𝓐` at every sample of an already framed immersion.
pub fn stability_operator(imm: &DiscreteImmersion, frames: &FrameField) -> Result<Vec<DMatrix<f64>>> {
    let chart = imm.chart();
    frames
        .frames
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let eval = || -> Result<DMatrix<f64>> {
                let cdata = chart.riemann_at(&f.point)?;
                Ok(-partial_ricci(&cdata, f) - shape_quadratic(f)?)
            };
            eval().map_err(|e| Error::at_sample(k, e))
        })
        .collect()
}

pub fn certify_with_frames(imm: &DiscreteImmersion, frames: &FrameField, margin: f64) -> Result<StabilityCertificate> {
    check_margin(margin)?;
    let samples = stability_operator(imm, frames)?
        .into_iter()
        .enumerate()
        .map(|(k, s)| SampleStability {
            patch: 0,
            index: k,
            point: imm.samples()[k].iter().copied().collect(),
            eigenvalues: sorted_symmetric_eigenvalues(&s),
            matrix: s.transpose().as_slice().to_vec(),
        })
        .collect();
    Ok(StabilityCertificate::assemble(samples, margin))
}

pub fn certify_strong_stability(imm: &DiscreteImmersion, margin: f64) -> Result<StabilityCertificate> {
    check_margin(margin)?;
    let frames = second_fundamental_form(imm, &frames_at(imm)?)?;
    certify_with_frames(imm, &frames, margin)
}

fn check_margin(margin: f64) -> Result<()> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::validation("margin", format!("must be positive, got {margin}")));
    }
    Ok(())
}

/// Discrete second variation of a closed curve along the normal field with
/// frame components `v[k]`:
/// `Q(V) = Σ_k |∇^⊥V|²_k ℓ_k + Σ_k ℓ̄_k ⟨S_k V_k, V_k⟩`, returned with `Σ_k ℓ̄_k |V_k|²`.
///
/// `∇^⊥V` on segment `k` is the forward difference of `V` expressed in the
/// normal frame at sample `k`.
pub fn second_variation(
    imm: &DiscreteImmersion,
    frames: &FrameField,
    cert: &StabilityCertificate,
    v: &[DVector<f64>],
) -> Result<(f64, f64)> {
    if imm.shape() != Shape::Curve {
        return Err(Error::Degenerate("second variation is implemented for curves".into()));
    }
    let n = imm.len();
    if v.len() != n || cert.samples.len() != n {
        return Err(Error::Degenerate("field length does not match the sample count".into()));
    }
    let lengths = imm.segment_lengths()?;
    let (mut q, mut mass) = (0.0, 0.0);
    for k in 0..n {
        let next = (k + 1) % n;
        let (fk, fn_) = (&frames.frames[k], &frames.frames[next]);
        let ahead = (0..frames.m).fold(DVector::zeros(fk.point.len()), |acc, b| acc + &fn_.normals[b] * v[next][b]);
        let here = DVector::from_fn(frames.m, |a, _| inner(&fk.g, &ahead, &fk.normals[a]));
        let grad = (here - &v[k]) / lengths[k];
        q += grad.norm_squared() * lengths[k];
        let w = 0.5 * (lengths[(k + n - 1) % n] + lengths[k]);
        q += w * (cert.matrix(k) * &v[k]).dot(&v[k]);
        mass += w * v[k].norm_squared();
    }
    Ok((q, mass))
}
