//! Adaptive wrapper around double-exponential quadrature.
//!
//! The underlying rule silently replaces non-finite integrand values by zero,
//! so evaluations are watched here and a non-finite value is an error.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const MAX_CALLS: u32 = 20_000;
const MAX_TAIL_PIECES: usize = 400;

/// Subinterval ordered by error estimate.
struct Piece {
    a: f64,
    b: f64,
    out: quadrature::Output,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.out.error_estimate.total_cmp(&other.out.error_estimate)
    }
}

/// Integral of `f` over a finite interval to within `abs_tol` or `rel_tol`
/// relative error, whichever is looser. Globally adaptive: the piece with
/// the largest error estimate is bisected until the summed estimate meets
/// the budget.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let bad = Cell::new(None);
    let g = |x: f64| {
        let v = f(x);
        if !v.is_finite() && bad.get().is_none() {
            bad.set(Some(x));
        }
        v
    };
    let calls = Cell::new(0u32);
    let rule = |a: f64, b: f64, tol: f64| {
        calls.set(calls.get() + 1);
        Piece { a, b, out: quadrature::integrate(g, a, b, tol) }
    };
    let first = rule(a, b, abs_tol.max(rel_tol * 1e-3));
    let mut heap = BinaryHeap::new();
    let mut total = first.out.integral;
    let mut err = first.out.error_estimate;
    heap.push(first);
    loop {
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target {
            break;
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if calls.get() >= MAX_CALLS || m <= worst.a || m >= worst.b {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] (error estimate {err:e}, worst piece [{}, {}])",
                worst.a, worst.b
            )));
        }
        let local = 0.25 * target * (worst.b - worst.a) / (b - a);
        let left = rule(worst.a, m, local);
        let right = rule(m, worst.b, local);
        total += left.out.integral + right.out.integral - worst.out.integral;
        err += left.out.error_estimate + right.out.error_estimate - worst.out.error_estimate;
        heap.push(left);
        heap.push(right);
    }
    if let Some(x) = bad.get() {
        return Err(Error::Quadrature(format!("integrand is not finite at x = {x}")));
    }
    // Re-add in a fixed order so the result does not depend on heap layout.
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(pieces.iter().map(|p| p.out.integral).sum())
}

/// Integral of a nonnegative-tailed `f` over `[a, ∞)`, summed over doubling
/// pieces until they stop contributing.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, rel_tol: f64) -> Result<f64> {
    let mut total: f64 = 0.0;
    let mut lo = a;
    let mut width = scale;
    let mut quiet = 0;
    for _ in 0..MAX_TAIL_PIECES {
        let hi = lo + width;
        if !hi.is_finite() {
            break;
        }
        let piece = integrate(&f, lo, hi, rel_tol * total.abs(), rel_tol)?;
        total += piece;
        if piece.abs() <= 1e-16 * total.abs() || (total == 0.0 && piece == 0.0 && lo > a + 64.0 * scale) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Divergence(format!("tail integral from {a} did not settle (partial sum {total:e})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-13, 1e-13).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate(|x: f64| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-10, 1e-10).is_err());
    }

    #[test]
    fn slowly_decaying_tail_diverges() {
        assert!(integrate_to_infinity(|x: f64| 1.0 / (1.0 + x), 0.0, 1.0, 1e-10).is_err());
    }
}
