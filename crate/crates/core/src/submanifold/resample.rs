use nalgebra::DVector;

use super::{DiscreteImmersion, Shape};
use crate::error::{Error, Result};

/// Redistributes a curve's samples to uniform metric arclength.
///
/// The curve is interpolated by a periodic cubic Hermite spline in cumulative
/// segment length (tangents from the three-point non-uniform difference), and
/// `target_count` points are placed at equal length fractions starting at
/// sample 0. Two passes are made so the output spacing is uniform to well
/// under 1%.
pub fn resample(imm: &DiscreteImmersion, target_count: usize) -> Result<DiscreteImmersion> {
    if imm.shape() != Shape::Curve {
        return Err(Error::Degenerate("resampling is only defined for curves".into()));
    }
    if target_count < 8 {
        return Err(Error::Degenerate(format!("target_count must be at least 8, got {target_count}")));
    }
    let first = resample_once(imm, target_count)?;
    resample_once(&first, target_count)
}

fn resample_once(imm: &DiscreteImmersion, target_count: usize) -> Result<DiscreteImmersion> {
    let chart = imm.chart();
    let n = imm.len();
    let lengths = imm.segment_lengths()?;
    let total: f64 = lengths.iter().sum();
    if !(total > 1e-12 * chart.length_scale()) {
        return Err(Error::Degenerate(format!("curve length {total:e} is below tolerance")));
    }
    let samples = imm.samples();
    let steps: Vec<DVector<f64>> = (0..n).map(|k| chart.displacement(&samples[k], &samples[imm.next(k)])).collect();
    // dx/ds at each sample
    let slopes: Vec<DVector<f64>> = (0..n)
        .map(|k| {
            let (a, b) = (lengths[imm.prev(k)], lengths[k]);
            (&steps[k] * (a * a) + &steps[imm.prev(k)] * (b * b)) / (a * b * (a + b))
        })
        .collect();

    let mut out = Vec::with_capacity(target_count);
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    for j in 0..target_count {
        let s = total * j as f64 / target_count as f64;
        while seg + 1 < n && seg_start + lengths[seg] <= s {
            seg_start += lengths[seg];
            seg += 1;
        }
        let len = lengths[seg];
        let tau = ((s - seg_start) / len).clamp(0.0, 1.0);
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let h10 = t3 - 2.0 * t2 + tau;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        // origin at the segment start; the end is start + step (unwrapped)
        let offset = &slopes[seg] * (h10 * len) + &steps[seg] * h01 + &slopes[imm.next(seg)] * (h11 * len);
        out.push(chart.wrap(&(&samples[seg] + offset)));
    }
    imm.with_samples(out)
}

/// `max_k |ℓ_k − mean| / mean` over metric segment lengths.
pub fn spacing_deviation(imm: &DiscreteImmersion) -> Result<f64> {
    let lengths = imm.segment_lengths()?;
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    Ok(lengths.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max) / mean)
}
