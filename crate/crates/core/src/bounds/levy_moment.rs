use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pathsim::{JumpMeasure, Side};
use crate::quad;

const DOUBLINGS: usize = 64;
const TREND: usize = 8;
const NEGLIGIBLE: f64 = 40.0;
const PROBES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentCheck {
    pub alpha: f64,
    pub finite: bool,
    /// `∫_{|x|>1} e^{alpha |x|} nu(dx)`; `inf` when divergent or too large for `f64`.
    pub integral: f64,
    pub ln_integral: f64,
    pub threshold: f64,
}

/// `ln ∫_lo^hi exp(g(y)) dy`, integrated in `s = ln y` after removing the
/// largest probed value of the exponent.
fn ln_piece(g: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let h = |s: f64| g(s.exp()) + s;
    let shift = (0..PROBES)
        .map(|i| h(a + (b - a) * i as f64 / (PROBES - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let v = quad::integrate(|s| (h(s) - shift).exp(), a, b, 0.0, 1e-10)?;
    Ok(shift + v.ln())
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

enum SideVerdict {
    Finite(f64),
    Infinite,
}

/// Doubling pieces `[2^{k-1}, 2^k]` of one side's integral. Infinite once the
/// pieces grow over `TREND` consecutive doublings; finite once they fall
/// below `e^{-40}` of the partial sum, or decay steadily through the last
/// `TREND` doublings (geometric tail estimate added).
fn side_integral(nu: &JumpMeasure, side: Side, alpha: f64) -> Result<SideVerdict> {
    let g = |y: f64| nu.ln_tilted_side_density(side, y, alpha);
    let mut ln_total = f64::NEG_INFINITY;
    let mut prev = f64::NAN;
    let (mut up, mut down) = (0, 0);
    for k in 1..=DOUBLINGS {
        let (lo, hi) = (2f64.powi(k as i32 - 1), 2f64.powi(k as i32));
        let piece = match ln_piece(&g, lo, hi) {
            Ok(v) => v,
            // Quadrature failure at the growing end of a divergent integrand.
            Err(_) if up > 0 => return Ok(SideVerdict::Infinite),
            Err(e) => return Err(e),
        };
        ln_total = ln_add(ln_total, piece);
        if k > 1 {
            if piece >= prev {
                up += 1;
                down = 0;
            } else {
                down += 1;
                up = 0;
            }
        }
        if up >= TREND {
            return Ok(SideVerdict::Infinite);
        }
        if piece < ln_total - NEGLIGIBLE && down >= 1 {
            return Ok(SideVerdict::Finite(ln_total));
        }
        prev = piece;
    }
    if down >= TREND {
        // Ratio of the last two pieces bounds the rest geometrically.
        let ln_ratio = prev - {
            let lo = 2f64.powi(DOUBLINGS as i32 - 2);
            ln_piece(&g, lo, 2.0 * lo)?
        };
        let ratio = ln_ratio.exp();
        if ratio < 1.0 {
            let ln_tail = prev + ln_ratio - (1.0 - ratio).ln();
            return Ok(SideVerdict::Finite(ln_add(ln_total, ln_tail)));
        }
    }
    Ok(SideVerdict::Infinite)
}

/// Decides whether `∫_{|x|>1} e^{alpha|x|} nu(dx)` is finite and evaluates it.
pub fn levy_exp_moment_check(nu: &JumpMeasure, alpha: f64) -> Result<ExpMomentCheck> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be finite and > 0, got {alpha}")));
    }
    nu.validate()?;
    let threshold = nu.exp_moment_threshold();
    let ln_integral = match nu {
        JumpMeasure::None => f64::NEG_INFINITY,
        JumpMeasure::Discrete { atoms } => atoms
            .iter()
            .filter(|a| a[0].abs() > 1.0 && a[1] > 0.0)
            .map(|a| alpha * a[0].abs() + a[1].ln())
            .fold(f64::NEG_INFINITY, ln_add),
        _ => {
            let mut total = f64::NEG_INFINITY;
            for side in [Side::Pos, Side::Neg] {
                match side_integral(nu, side, alpha)? {
                    SideVerdict::Finite(v) => total = ln_add(total, v),
                    SideVerdict::Infinite => total = f64::INFINITY,
                }
            }
            total
        }
    };
    let finite = ln_integral < f64::INFINITY;
    Ok(ExpMomentCheck { alpha, finite, integral: ln_integral.exp(), ln_integral, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(alpha: f64, lambda: f64) -> JumpMeasure {
        JumpMeasure::TemperedStable {
            alpha_p: alpha,
            alpha_n: alpha,
            lambda_p: lambda,
            lambda_n: lambda,
            c_p: 1.0,
            c_n: 1.0,
        }
    }

    #[test]
    fn tempered_stable_examples() {
        let nu = ts(1.2, 2.0);
        let below = levy_exp_moment_check(&nu, 1.0).unwrap();
        assert!(below.finite);
        assert_eq!(below.threshold, 2.0);
        assert!(!levy_exp_moment_check(&nu, 3.0).unwrap().finite);
    }

    #[test]
    fn tempered_value_against_closed_form() {
        // alpha_p = -1: ∫_1^∞ e^{(a - lambda) y} dy = e^{a - lambda} / (lambda - a), per side.
        let nu = ts(-1.0, 2.0);
        let got = levy_exp_moment_check(&nu, 0.5).unwrap();
        let want = 2.0 * (-1.5f64).exp() / 1.5;
        assert!((got.integral / want - 1.0).abs() < 1e-8, "{} vs {want}", got.integral);
    }

    #[test]
    fn boundary_depends_on_power() {
        assert!(levy_exp_moment_check(&ts(0.5, 2.0), 2.0).unwrap().finite);
        assert!(!levy_exp_moment_check(&ts(0.0, 2.0), 2.0).unwrap().finite);
        assert!(!levy_exp_moment_check(&ts(-0.5, 2.0), 2.0).unwrap().finite);
    }

    #[test]
    fn meixner_threshold() {
        let nu = JumpMeasure::Meixner { delta: 1.0, eta: 2.0, beta: 1.0 };
        let thr = (std::f64::consts::PI - 1.0) / 2.0;
        assert!(levy_exp_moment_check(&nu, 0.95 * thr).unwrap().finite);
        assert!(!levy_exp_moment_check(&nu, 1.05 * thr).unwrap().finite);
        assert!(!levy_exp_moment_check(&nu, thr).unwrap().finite);
    }

    #[test]
    fn trivial_measures() {
        let none = levy_exp_moment_check(&JumpMeasure::None, 10.0).unwrap();
        assert!(none.finite);
        assert_eq!(none.integral, 0.0);
        let atoms = JumpMeasure::Discrete { atoms: vec![[2.0, 0.5], [0.5, 4.0]] };
        let d = levy_exp_moment_check(&atoms, 1.0).unwrap();
        assert!((d.integral - 0.5 * 2f64.exp()).abs() < 1e-14);
        assert!(levy_exp_moment_check(&atoms, 0.0).is_err());
    }
}
