//! Scalar root finding on monotone functions.
//!
//! Every solver here follows the same policy: grow a bracket geometrically
//! from a starting point, bisect a fixed number of times and finish with a
//! few guarded Newton steps. Iteration counts are fixed so that results are
//! bit-reproducible.

use crate::error::{Error, Result};

/// Number of bisection halvings applied once a bracket is known.
pub const BISECTION_STEPS: usize = 60;
/// Upper bound on Newton polishing steps after bisection.
pub const NEWTON_STEPS: usize = 5;

/// Positive root of an increasing function `g` on `(0, ∞)`, searching
/// `s ∈ [s_min, s_max]` by doubling/halving from `s = 1`.
///
/// `g` may return `None` where it is undefined; such points are treated as
/// lying below the root (the function is "too small" there), which is the
/// right convention for operators that vanish on the cone boundary.
pub fn positive_root<G, D>(g: G, dg: Option<D>, s_min: f64, s_max: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> Option<f64>,
    D: Fn(f64) -> Option<f64>,
{
    let sign = |s: f64| g(s).map(|v| v > 0.0).unwrap_or(false);
    let (mut lo, mut hi);
    if sign(1.0) {
        hi = 1.0;
        lo = 0.5;
        while sign(lo) {
            hi = lo;
            lo *= 0.5;
            if lo < s_min {
                return Err(Error::NonConvergence(format!(
                    "no sign change above s = {s_min:e}"
                )));
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !sign(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > s_max {
                return Err(Error::NonConvergence(format!(
                    "no sign change below s = {s_max:e}"
                )));
            }
        }
    }
    let root = bisect_then_newton(&g, dg.as_ref(), lo, hi);
    match g(root) {
        Some(v) if v.abs() <= tol => Ok(root),
        Some(v) => Err(Error::NonConvergence(format!(
            "residual {v:e} above tolerance {tol:e} at s = {root}"
        ))),
        None => Err(Error::NonConvergence(format!(
            "function undefined at final iterate {root}"
        ))),
    }
}

/// Bisection on `[lo, hi]` with `g(lo) <= 0 < g(hi)` (undefined counts as
/// `<= 0`), followed by at most [`NEWTON_STEPS`] Newton steps that are only
/// accepted while they stay inside the final bracket and reduce `|g|`.
pub fn bisect_then_newton<G, D>(g: &G, dg: Option<&D>, mut lo: f64, mut hi: f64) -> f64
where
    G: Fn(f64) -> Option<f64>,
    D: Fn(f64) -> Option<f64>,
{
    let positive = |s: f64| g(s).map(|v| v > 0.0).unwrap_or(false);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // pick the bracket end with a defined value closest to zero
    let mut best = hi;
    let mut best_abs = g(hi).map(f64::abs).unwrap_or(f64::INFINITY);
    if let Some(v) = g(lo) {
        if v.abs() < best_abs {
            best = lo;
            best_abs = v.abs();
        }
    }
    if let Some(dg) = dg {
        let (a, b) = (lo.min(hi), lo.max(hi));
        let width = (b - a).max(f64::EPSILON * best.abs());
        for _ in 0..NEWTON_STEPS {
            let (Some(v), Some(d)) = (g(best), dg(best)) else {
                break;
            };
            if v == 0.0 || d == 0.0 || !d.is_finite() {
                break;
            }
            let next = best - v / d;
            if (next - best).abs() > 4.0 * width {
                break;
            }
            match g(next) {
                Some(w) if w.abs() < best_abs => {
                    best = next;
                    best_abs = w.abs();
                }
                _ => break,
            }
        }
    }
    best
}

/// Root of a decreasing-or-increasing function on the real line, expanding
/// a bracket around `start` with initial half-width `step` for at most
/// `max_doublings` doublings. `g` must move from negative to positive as
/// its argument moves in direction `orientation` (`+1.0` or `-1.0`).
pub fn expand_and_solve<G, D>(
    g: G,
    dg: Option<D>,
    start: f64,
    step: f64,
    orientation: f64,
    max_doublings: usize,
) -> Result<f64>
where
    G: Fn(f64) -> Option<f64>,
    D: Fn(f64) -> Option<f64>,
{
    // work in the variable z = orientation * w so that g is increasing in z
    let gz = |z: f64| g(orientation * z);
    let dgz = dg.as_ref().map(|d| move |z: f64| d(orientation * z).map(|v| v * orientation));
    let positive = |z: f64| gz(z).map(|v| v > 0.0).unwrap_or(false);

    let z0 = orientation * start;
    let mut width = step.abs().max(f64::MIN_POSITIVE);
    let (lo, hi) = if positive(z0) {
        let mut lo = z0 - width;
        let mut k = 0;
        while positive(lo) {
            width *= 2.0;
            lo = z0 - width;
            k += 1;
            if k > max_doublings {
                return Err(Error::NonConvergence(format!(
                    "no sign change below {}",
                    orientation * lo
                )));
            }
        }
        (lo, z0)
    } else {
        let mut hi = z0 + width;
        let mut k = 0;
        while !positive(hi) {
            width *= 2.0;
            hi = z0 + width;
            k += 1;
            if k > max_doublings {
                return Err(Error::NonConvergence(format!(
                    "no sign change above {}",
                    orientation * hi
                )));
            }
        }
        (z0, hi)
    };
    let z = bisect_then_newton(&gz, dgz.as_ref(), lo, hi);
    Ok(orientation * z)
}
