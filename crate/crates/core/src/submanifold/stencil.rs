//! Five-point finite-difference stencils along one grid direction.

/// Offsets and weights of a derivative stencil.
pub(crate) type Stencil = Vec<(isize, f64)>;

const FIRST_CENTERED: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const SECOND_CENTERED: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const FIRST_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const SECOND_EDGE0: [f64; 5] = [35.0, -104.0, 114.0, -56.0, 11.0];
const FIRST_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const SECOND_EDGE1: [f64; 5] = [11.0, -20.0, 6.0, 4.0, -1.0];

fn build(start: isize, w: &[f64; 5], sign: f64) -> Stencil {
    (0..5).map(|k| (start + k as isize, sign * w[k] / 12.0)).collect()
}

fn mirrored(start: isize, w: &[f64; 5], sign: f64) -> Stencil {
    // reflect a forward stencil about the center sample
    (0..5).map(|k| (-(start + k as isize), sign * w[k] / 12.0)).collect()
}

/// Stencil for the `order`-th derivative (1 or 2) at index `i` of a line of `n`
/// samples. Offsets are relative to `i`; periodic lines always use the centered form.
pub(crate) fn stencil(order: u8, i: usize, n: usize, periodic: bool) -> Stencil {
    let (centered, edge0, edge1, odd) = match order {
        1 => (&FIRST_CENTERED, &FIRST_EDGE0, &FIRST_EDGE1, -1.0),
        _ => (&SECOND_CENTERED, &SECOND_EDGE0, &SECOND_EDGE1, 1.0),
    };
    if periodic || (i >= 2 && i + 2 < n) {
        return build(-2, centered, 1.0);
    }
    match i {
        0 => build(0, edge0, 1.0),
        1 => build(-1, edge1, 1.0),
        _ if i + 1 == n => mirrored(0, edge0, odd),
        _ => mirrored(-1, edge1, odd),
    }
}
