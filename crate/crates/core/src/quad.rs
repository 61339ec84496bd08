//! Adaptive Simpson quadrature for tail-type integrands.
//!
//! The integrands in this crate are products of survival functions:
//! bounded by one, nonnegative, eventually nonincreasing, and smooth except
//! for kinks at the atoms and support endpoints of the underlying laws.
//! Callers pass those known breakpoints so the adaptive subdivision never
//! has to discover a kink on its own.

use crate::error::{Error, Result};

/// Integrand values below this threshold terminate the search for the
/// truncation point of a semi-infinite integral.
pub const TRUNCATION_CUTOFF: f64 = 1e-12;

/// Default absolute tolerance for expectation integrals.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_DEPTH: u32 = 48;
const MAX_DOUBLINGS: u32 = 120;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Integrates a nonnegative integrand over `[0, inf)`.
///
/// The upper limit is found by doubling past the largest breakpoint until
/// the integrand falls below [`TRUNCATION_CUTOFF`]; the finite range is then
/// split at the breakpoints and each piece is integrated adaptively.
/// Returns [`Error::Nonintegrable`] when no truncation point is found.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64) -> Result<f64> {
    let mut hi = breakpoints.iter().copied().fold(1.0_f64, f64::max);
    if !hi.is_finite() {
        hi = 1.0;
    }
    let mut doublings = 0;
    while f(hi) >= TRUNCATION_CUTOFF {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Nonintegrable(format!(
                "integrand still {:.3e} at t = {:.3e}",
                f(hi),
                hi
            )));
        }
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > 0.0 && x < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.insert(0, 0.0);
    cuts.push(hi);

    let piece_tol = tol / cuts.len() as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], piece_tol);
    }
    Ok(total)
}
