//! One-dimensional minimization of a convex objective along a ray:
//! bracket expansion by doubling, golden-section shrinkage, then a
//! derivative-sign bisection polish.
//!
//! The polish exists because value comparisons alone cannot localize an
//! argmin below about sqrt(machine epsilon); the directional derivative is
//! monotone for convex objectives, so bisecting its sign narrows the
//! bracket all the way to `line_tol`.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::objective::Objective;
use crate::space::Point;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Doubling past this magnitude without an upturn means the restriction is
/// unbounded below, which a bounded level set rules out.
const MAX_BRACKET: f64 = (1u64 << 60) as f64;

#[derive(Clone, Copy, Debug)]
pub struct LineMinimum {
    /// Step along the direction.
    pub step: f64,
    /// Objective value at `base + step * direction`.
    pub value: f64,
}

/// Minimize `c -> E(base + c * direction)` over signed steps. The returned
/// step lies within a final bracket of width at most `line_tol`.
pub fn line_minimize(
    objective: &Objective,
    base: &Point,
    direction: &Point,
    line_tol: f64,
) -> Result<LineMinimum> {
    if direction.is_zero() {
        return Err(Error::ZeroDirection);
    }
    if !(line_tol > 0.0) {
        return Err(Error::InvalidSolverConfig(format!(
            "line_tol must be positive, got {line_tol}"
        )));
    }
    let phi = |c: f64| objective.value(&base.add_scaled(c, direction));

    let f0 = phi(0.0);
    let f_plus = phi(1.0);
    let f_minus = phi(-1.0);

    let (mut lo, mut hi) = if f0 <= f_plus && f0 <= f_minus {
        // Interior point already below both ends; convexity keeps the
        // minimizer inside.
        (-1.0, 1.0)
    } else {
        let dir: f64 = if f_plus < f_minus { 1.0 } else { -1.0 };
        let mut prev = 0.0;
        let mut cur = dir;
        let mut f_cur = if dir > 0.0 { f_plus } else { f_minus };
        loop {
            let next = cur * 2.0;
            if next.abs() > MAX_BRACKET {
                return Err(Error::UnboundedBelow);
            }
            let f_next = phi(next);
            if f_next >= f_cur {
                break if dir > 0.0 {
                    (prev, next)
                } else {
                    (next, prev)
                };
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
        }
    };

    // Golden-section shrink; each iteration reuses one interior evaluation.
    // Stop while value comparisons are still informative.
    let coarse_target = (1e-4 * (1.0 + lo.abs().max(hi.abs()))).max(line_tol);
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    let mut guard = 0usize;
    while hi - lo > coarse_target && guard < 10_000 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = phi(x2);
        }
        guard += 1;
    }

    // Bisection on the sign of the directional derivative. The minimizer
    // stays inside [lo, hi] throughout.
    let dphi = |c: f64| {
        let g = objective.gradient(&base.add_scaled(c, direction));
        dot(g.as_slice(), direction.as_slice())
    };
    guard = 0;
    while hi - lo > line_tol && guard < 10_000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        if dphi(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        guard += 1;
    }

    let step = 0.5 * (lo + hi);
    Ok(LineMinimum {
        step,
        value: phi(step),
    })
}
