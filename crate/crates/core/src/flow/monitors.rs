use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{run, FlowParams, FlowTarget, FlowTrace, Outcome};
use crate::barrier::BarrierCertificate;
use crate::error::{Error, Result};
use crate::submanifold::DiscreteImmersion;

/// Records below this `sup ψ` are left out of the decay-rate fit.
const FIT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct TrappingReport {
    pub c1: f64,
    pub slack: f64,
    pub violations: usize,
    /// Largest `sup ψ(t) / (e^{−c₁(t−t₀)} sup ψ(t₀)) − 1` over records.
    pub max_excess: f64,
    /// Least-squares exponential rate of `sup ψ`.
    pub fitted_rate: Option<f64>,
    pub passes: bool,
}

/// Checks `sup ψ(t) ≤ e^{−c₁(t−t₀)} sup ψ(t₀) (1 + slack)` on every record.
pub fn trapping_check(trace: &FlowTrace, cert: &BarrierCertificate, slack: f64) -> TrappingReport {
    let c1 = cert.c1;
    let recs: Vec<_> = trace.records.iter().filter(|r| r.sup_psi.is_finite()).collect();
    let mut report = TrappingReport {
        c1,
        slack,
        violations: 0,
        max_excess: 0.0,
        fitted_rate: None,
        passes: true,
    };
    let Some(first) = recs.first() else {
        return report;
    };
    let (t0, psi0) = (first.t, first.sup_psi);
    if psi0 <= 0.0 {
        // stationary on Σ: any later growth is a violation
        report.violations = recs.iter().filter(|r| r.sup_psi > 0.0).count();
        report.passes = report.violations == 0;
        return report;
    }
    for r in &recs {
        let bound = (-c1 * (r.t - t0)).exp() * psi0;
        let excess = r.sup_psi / bound - 1.0;
        report.max_excess = report.max_excess.max(excess);
        if excess > slack {
            report.violations += 1;
        }
    }
    let pts: Vec<(f64, f64)> = recs.iter().filter(|r| r.sup_psi > FIT_FLOOR).map(|r| (r.t, r.sup_psi.ln())).collect();
    if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        if sxx > 0.0 {
            report.fitted_rate = Some(-sxy / sxx);
        }
    }
    report.passes = report.violations == 0 && report.fitted_rate.map_or(true, |r| r >= c1);
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    pub c1: f64,
    /// Largest increase of `v(t) = sup e^{c₁t} ψ` between consecutive records (0 if none).
    pub max_increment: f64,
    pub tolerance: f64,
    pub passes: bool,
}

pub fn barrier_monotone_check(trace: &FlowTrace, cert: &BarrierCertificate, tolerance: f64) -> MonotoneReport {
    let c1 = cert.c1;
    let v: Vec<f64> = trace
        .records
        .iter()
        .filter(|r| r.sup_psi.is_finite())
        .map(|r| (c1 * r.t).exp() * r.sup_psi)
        .collect();
    let max_increment = v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    MonotoneReport {
        c1,
        max_increment,
        tolerance,
        passes: max_increment < tolerance,
    }
}

/// `|Δvolume + ∫∫|H|²|` over the run, relative to the initial volume.
pub fn dissipation_check(trace: &FlowTrace) -> f64 {
    let (first, last) = (&trace.records[0], trace.last());
    ((last.volume - first.volume) + (last.dissipation - first.dissipation)).abs() / first.volume
}

#[derive(Debug, Clone, Serialize)]
pub struct MassReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub final_ratio: f64,
    /// `θ̂(t) ∈ (0, 2)` on every record.
    pub within_bounds: bool,
    /// Converged with `|θ̂ − 1| < 0.01`.
    pub multiplicity_one: bool,
    /// Volume stays `≥ 0.9 |Σ|` once `t ≥ 1/c₁`.
    pub non_vanishing: bool,
    /// Largest volume increase between consecutive records.
    pub max_volume_increase: f64,
}

pub fn mass_checks(trace: &FlowTrace) -> Option<MassReport> {
    let sv = trace.sigma_volume?;
    let c1 = trace.c1?;
    let ratios: Vec<f64> = trace.records.iter().map(|r| r.mass_ratio).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let final_ratio = trace.last().mass_ratio;
    let settle = if c1 > 0.0 { 1.0 / c1 } else { f64::INFINITY };
    Some(MassReport {
        min_ratio,
        max_ratio,
        final_ratio,
        within_bounds: min_ratio > 0.0 && max_ratio < 2.0,
        multiplicity_one: trace.outcome == Outcome::Converged && (final_ratio - 1.0).abs() < 0.01,
        non_vanishing: trace.records.iter().filter(|r| r.t >= settle).all(|r| r.volume >= 0.9 * sv),
        max_volume_increase: trace
            .records
            .windows(2)
            .map(|w| w[1].volume - w[0].volume)
            .fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedResult {
    pub seed: usize,
    pub outcome: Option<Outcome>,
    pub final_hausdorff: f64,
    pub final_sup_h: f64,
    pub trapping_violations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub rng_seed: u64,
    pub seeds: usize,
    /// Runs that converged with final Hausdorff distance below the threshold.
    pub converged_to_sigma: usize,
    /// Runs that became stationary away from Σ.
    pub stabilized_elsewhere: Vec<usize>,
    pub failed: usize,
    pub hausdorff_threshold: f64,
    pub results: Vec<SeedResult>,
}

pub const UNIQUENESS_HAUSDORFF: f64 = 1e-2;

/// Runs the flow from `seeds` initial immersions drawn by `perturb` from one
/// generator seeded with `rng_seed`, and classifies where each run ends.
pub fn uniqueness_search(
    target: FlowTarget<'_>,
    perturb: &dyn Fn(&mut ChaCha8Rng) -> Result<DiscreteImmersion>,
    seeds: usize,
    rng_seed: u64,
    params: &FlowParams,
) -> Result<UniquenessReport> {
    if !target.cert.passes() {
        return Err(Error::validation("certificate", "uniqueness search needs a passing barrier certificate"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let initial: Vec<Result<DiscreteImmersion>> = (0..seeds).map(|_| perturb(&mut rng)).collect();
    let mut results = Vec::with_capacity(seeds);
    for (seed, imm0) in initial.into_iter().enumerate() {
        let outcome = imm0.and_then(|imm0| run(&imm0, Some(target), params));
        results.push(match outcome {
            Ok(trace) => {
                let last = trace.last();
                SeedResult {
                    seed,
                    outcome: Some(trace.outcome),
                    final_hausdorff: last.hausdorff,
                    final_sup_h: last.sup_h,
                    trapping_violations: trapping_check(&trace, target.cert, 0.05).violations,
                    error: None,
                }
            }
            Err(e) => SeedResult {
                seed,
                outcome: None,
                final_hausdorff: f64::NAN,
                final_sup_h: f64::NAN,
                trapping_violations: 0,
                error: Some(e.to_string()),
            },
        });
    }
    let converged_to_sigma = results
        .iter()
        .filter(|r| r.outcome == Some(Outcome::Converged) && r.final_hausdorff < UNIQUENESS_HAUSDORFF)
        .count();
    let stabilized_elsewhere = results
        .iter()
        .filter(|r| r.final_sup_h < params.mean_h_tol && !(r.final_hausdorff < UNIQUENESS_HAUSDORFF))
        .map(|r| r.seed)
        .collect();
    Ok(UniquenessReport {
        rng_seed,
        seeds,
        converged_to_sigma,
        stabilized_elsewhere,
        failed: results.iter().filter(|r| r.error.is_some()).count(),
        hausdorff_threshold: UNIQUENESS_HAUSDORFF,
        results,
    })
}
