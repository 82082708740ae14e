//! Orlicz scale `C` with `E phi_2(|Z| / C) <= 1` for sub-Gaussian `Z`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// `Z ~ N(0, v)`.
    Gaussian,
    /// Only `P(|Z| >= x) <= 2 exp(-x^2 / (2v))` is known.
    TailOnly,
}

impl TailModel {
    /// `ln P(|Z| >= x)` (or of its bound).
    fn ln_tail(self, v: f64, x: f64) -> f64 {
        match self {
            TailModel::Gaussian => erfc(x / (2.0 * v).sqrt()).ln(),
            TailModel::TailOnly => (LN_2 - x * x / (2.0 * v)).min(0.0),
        }
    }
}

/// `E phi_2(|Z| / c) = ∫_0^∞ (2 ln2 x / c^2) 2^{x^2/c^2} P(|Z| >= x) dx`.
pub fn orlicz_moment(model: TailModel, v: f64, c: f64) -> Result<f64> {
    let a = LN_2 / (c * c);
    if a >= 1.0 / (2.0 * v) {
        return Ok(f64::INFINITY);
    }
    let f = |x: f64| 2.0 * a * x * (a * x * x + model.ln_tail(v, x)).exp();
    let s = v.sqrt();
    match model {
        TailModel::Gaussian => quad::integrate_to_infinity(f, 0.0, s, 1e-14),
        TailModel::TailOnly => {
            // The tail bound has a kink where it reaches 1.
            let kink = (2.0 * v * LN_2).sqrt();
            Ok(quad::integrate(f, 0.0, kink, 0.0, 1e-14)? + quad::integrate_to_infinity(f, kink, s, 1e-14)?)
        }
    }
}

/// Smallest `C` with `E phi_2(|Z| / C) <= 1`, by bisection on [`orlicz_moment`].
pub fn orlicz_scale_numeric(model: TailModel, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("variance proxy must be > 0, got {v}")));
    }
    let mut lo = (2.0 * v * LN_2).sqrt();
    let mut hi = 10.0 * v.sqrt();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if orlicz_moment(model, v, mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Orlicz scale for variance proxy `v`: closed form `sqrt(8 v ln2 / 3)` in the
/// Gaussian case, numeric for the tail-only case.
pub fn subgaussian_orlicz_scale(model: TailModel, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("variance proxy must be > 0, got {v}")));
    }
    match model {
        TailModel::Gaussian => Ok((8.0 * v * LN_2 / 3.0).sqrt()),
        TailModel::TailOnly => orlicz_scale_numeric(model, v),
    }
}
