use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `phi_p(x) = 2^{x^p} - 1`.
#[inline]
pub fn phi(p: f64, x: f64) -> f64 {
    (LN_2 * x.powf(p)).exp_m1()
}

/// `ln phi_p(x)` for `x > 0`, finite where `phi_p` itself overflows.
pub fn ln_phi(p: f64, x: f64) -> f64 {
    let t = LN_2 * x.powf(p);
    if t > 30.0 {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

/// `phi_p^{-1}(y) = log2(1 + y)^{1/p}`.
#[inline]
pub fn phi_inverse(p: f64, y: f64) -> f64 {
    (y.ln_1p() / LN_2).powf(1.0 / p)
}

/// Point past which `phi_p` is convex: 0 for `p >= 1`.
pub fn convexity_onset(p: f64) -> f64 {
    if p >= 1.0 {
        0.0
    } else {
        ((1.0 - p) / (p * LN_2)).powf(1.0 / p)
    }
}

/// `max_{x in [0, 1]} (x - x^{1/q})`, attained at `q^{q/(1-q)}`.
pub fn sublinearity_slack(q: f64) -> f64 {
    if q >= 1.0 {
        return 0.0;
    }
    let x = q.powf(q / (1.0 - q));
    x - x.powf(1.0 / q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrliczSpec {
    pub p: f64,
    pub q: f64,
    /// Subadditivity constant `max(1, 2^{(1-p)/p})`.
    pub l: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub c_pq: f64,
    pub d_pq: f64,
    pub e_q: f64,
}

pub fn orlicz_spec(p: f64, q: f64) -> Result<OrliczSpec> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("p must be > 0, got {p}")));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid(format!("q must lie in (0, 1], got {q}")));
    }
    let c_p = convexity_onset(p);
    let c_pq = convexity_onset(p * q);
    Ok(OrliczSpec {
        p,
        q,
        l: 1f64.max(2f64.powf((1.0 - p) / p)),
        c_p,
        d_p: phi(p, c_p),
        c_pq,
        d_pq: phi(p * q, c_pq),
        e_q: sublinearity_slack(q),
    })
}
