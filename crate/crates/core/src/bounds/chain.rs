use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::orlicz::{ln_phi, OrliczSpec};
use crate::error::{invalid, Error, Result};

const SERIES_REL_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 10_000;
const GEOMETRIC_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConstants {
    pub r: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 4.0 && r.is_finite()) {
        return Err(invalid(format!("net ratio r must be >= 4, got {r}")));
    }
    Ok(())
}

/// `A(r, q) = r^{(2-q)/q} / (r^{(1-q)/q} - 1)` and `B(r, q) = 2^{1/q} r^{1/q} + 1`.
pub fn net_constants(r: f64, q: f64) -> Result<NetConstants> {
    check_r(r)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q must lie in (0, 1) for net constants, got {q}")));
    }
    let a = r.powf((2.0 - q) / q) / (r.powf((1.0 - q) / q) - 1.0);
    let b = 2f64.powf(1.0 / q) * r.powf(1.0 / q) + 1.0;
    Ok(NetConstants { r, q, a, b })
}

/// `sum_{n=0}^{m} r^{-n} (r^{(n+1)/q} + 1)`, the quantity `A(r, q)` dominates.
pub fn net_partial_sum(r: f64, q: f64, m: usize) -> f64 {
    (0..=m)
        .map(|n| {
            let n = n as f64;
            // One power per term: r^{(n+1)/q} alone overflows long before the product.
            r.powf((n + 1.0) / q - n) + r.powf(-n)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

/// Sums positive terms given by their logarithms, stopping once the terms
/// are geometrically dominated and the tail estimate is negligible.
fn sum_log_series(ln_term: impl Fn(usize) -> f64, what: &str) -> Result<SeriesSum> {
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    for k in 0..SERIES_MAX_TERMS {
        let lt = ln_term(k);
        let t = lt.exp();
        if !t.is_finite() {
            return Err(Error::Divergence(format!("{what}: term {k} overflows")));
        }
        sum += t;
        if k > 0 {
            let ratio = (lt - prev).exp();
            if ratio < GEOMETRIC_RATIO {
                let tail = t * ratio / (1.0 - ratio);
                if tail <= SERIES_REL_TOL * sum {
                    return Ok(SeriesSum { value: sum, terms: k + 1 });
                }
            }
        }
        prev = lt;
    }
    Err(Error::Divergence(format!("{what}: not geometrically dominated after {SERIES_MAX_TERMS} terms")))
}

fn ln_m3_term(spec: &OrliczSpec, r: f64, l: usize) -> f64 {
    let l = l as f64;
    l * (1.0 - spec.q) / spec.q * LN_2 - ln_phi(spec.p, (r / 2.0).powf(l))
}

fn ln_m5_term(spec: &OrliczSpec, r: f64, m: usize) -> f64 {
    -ln_phi(spec.p, r.powf(m as f64))
}

/// `sum_{l>=0} 2^{l(1-q)/q} / phi(2^{-l} r^l)`.
pub fn m3_series(spec: &OrliczSpec, r: f64) -> Result<SeriesSum> {
    sum_log_series(|l| ln_m3_term(spec, r, l), "M3 series")
}

/// `sum_{m>=0} 1 / phi(r^m)`.
pub fn m5_series(spec: &OrliczSpec, r: f64) -> Result<SeriesSum> {
    sum_log_series(|m| ln_m5_term(spec, r, m), "M5 series")
}

/// First `terms` terms of the M3 series, for truncation checks.
pub fn m3_partial(spec: &OrliczSpec, r: f64, terms: usize) -> f64 {
    (0..terms).map(|l| ln_m3_term(spec, r, l).exp()).sum()
}

/// First `terms` terms of the M5 series, for truncation checks.
pub fn m5_partial(spec: &OrliczSpec, r: f64, terms: usize) -> f64 {
    (0..terms).map(|m| ln_m5_term(spec, r, m).exp()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConstants {
    pub r: f64,
    pub c: f64,
    pub m0: f64,
    pub a_rq: f64,
    pub b_rq: f64,
    pub k1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub k2: f64,
    pub m3_series: SeriesSum,
    pub m5_series: SeriesSum,
}

pub fn chaining_constants(spec: &OrliczSpec, r: f64, c: f64) -> Result<ChainConstants> {
    check_r(r)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("increment scale C must be > 0, got {c}")));
    }
    let q = spec.q;
    let net = net_constants(r, q)?;
    let cl = c * spec.l;
    let m0 = 12.0 * cl;
    let k1 = 2.0 * c * m0.powf(1.0 / q) * net.a * (1.0 + net.b);

    let base2 = (12f64.powf(1.0 - q) * cl).powf(1.0 / q);
    let m2 = base2 / (1.0 - 2f64.powf((1.0 - q) / q) * r.powf(-1.0 / q));
    let s3 = m3_series(spec, r)?;
    let m3 = 2.0 / m2 * base2 * s3.value;

    let m4 = (2.0 * 6f64.powf(1.0 - q) * cl / r).powf(1.0 / q);
    let s5 = m5_series(spec, r)?;
    let m5 = net.b * (2.0 * 6f64.powf(1.0 - q) * cl * r).powf(1.0 / q) * s5.value / m4;

    let k2 = 2.0 * m2 * m3.max(1.0) + m4 * m5.max(1.0);
    let out = ChainConstants {
        r,
        c,
        m0,
        a_rq: net.a,
        b_rq: net.b,
        k1,
        m2,
        m3,
        m4,
        m5,
        k2,
        m3_series: s3,
        m5_series: s5,
    };
    for (name, v) in [("K1", k1), ("M2", m2), ("M3", m3), ("M4", m4), ("M5", m5), ("K2", k2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Overflow(format!("{name} = {v} for r = {r}, q = {q}, C = {c}")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryConstants {
    pub a_phi_q: f64,
    pub b_phi_q: f64,
    pub a_bar: f64,
    pub b_bar: f64,
    pub d_bar: f64,
}

pub fn corollary_constants(cc: &ChainConstants, spec: &OrliczSpec) -> CorollaryConstants {
    let a_phi_q = cc.k1 * spec.e_q;
    let b_phi_q = cc.k1 + cc.k2;
    let kappa = (2.0 / LN_2).powf(1.0 / (spec.p * spec.q));
    CorollaryConstants {
        a_phi_q,
        b_phi_q,
        a_bar: a_phi_q + kappa * b_phi_q,
        b_bar: kappa * b_phi_q,
        d_bar: spec.d_pq + 1.0,
    }
}

/// Net ratios searched when minimizing `B_bar`.
pub const R_GRID: std::ops::RangeInclusive<u32> = 4..=64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub orlicz: OrliczSpec,
    pub chain: ChainConstants,
    pub corollary: CorollaryConstants,
}

/// Full constant pipeline at the `r` in [`R_GRID`] with the smallest `B_bar`.
pub fn optimized_pipeline(spec: &OrliczSpec, c: f64) -> Result<Pipeline> {
    let mut best: Option<Pipeline> = None;
    for r in R_GRID {
        let chain = chaining_constants(spec, r as f64, c)?;
        let corollary = corollary_constants(&chain, spec);
        if best.is_none_or(|b| corollary.b_bar < b.corollary.b_bar) {
            best = Some(Pipeline { orlicz: *spec, chain, corollary });
        }
    }
    Ok(best.expect("nonempty r grid"))
}

/// Pipeline at a fixed `r`.
pub fn pipeline_at(spec: &OrliczSpec, r: f64, c: f64) -> Result<Pipeline> {
    let chain = chaining_constants(spec, r, c)?;
    Ok(Pipeline { orlicz: *spec, chain, corollary: corollary_constants(&chain, spec) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::orlicz::orlicz_spec;

    #[test]
    fn net_constants_at_quarter_grid() {
        let n = net_constants(4.0, 0.5).unwrap();
        assert!((n.a - 64.0 / 3.0).abs() < 1e-12);
        assert_eq!(n.b, 65.0);
        assert!(net_constants(3.9, 0.5).is_err());
        assert!(net_constants(4.0, 1.0).is_err());
    }

    #[test]
    fn partial_sums_respect_a() {
        for r in [4.0, 6.0, 16.0] {
            for q in [0.2, 0.5, 0.9] {
                let a = net_constants(r, q).unwrap().a;
                for m in 0..=50 {
                    let lhs = net_partial_sum(r, q, m);
                    assert!(lhs <= a * r.powf(m as f64 * (1.0 - q) / q) * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn m0_for_brownian_scale() {
        let spec = orlicz_spec(2.0, 0.5).unwrap();
        let c = (8.0 * LN_2 / 3.0).sqrt();
        let cc = chaining_constants(&spec, 4.0, c).unwrap();
        assert!((cc.m0 - 16.315).abs() < 1e-3);
    }

    #[test]
    fn convex_series_bounds() {
        let spec = orlicz_spec(2.0, 0.5).unwrap();
        let r = 8.0;
        assert!(m3_series(&spec, r).unwrap().value <= 1.0 / (1.0 - 4.0 / r));
        assert!(m5_series(&spec, r).unwrap().value <= 1.0 / (1.0 - 1.0 / r));
    }

    #[test]
    fn corollary_ratio_and_limits() {
        let spec = orlicz_spec(2.0, 0.5).unwrap();
        let cc = chaining_constants(&spec, 4.0, 1.0).unwrap();
        let co = corollary_constants(&cc, &spec);
        assert!((co.b_bar / co.b_phi_q - 2.0 / LN_2).abs() < 1e-12);
        assert_eq!(co.d_bar, 1.0);
        let one = orlicz_spec(2.0, 1.0).unwrap();
        assert_eq!(corollary_constants(&cc, &one).a_phi_q, 0.0);
    }

    #[test]
    fn pipeline_is_finite_across_hurst() {
        for h in 1..=9 {
            let spec = orlicz_spec(2.0, h as f64 / 10.0).unwrap();
            let p = optimized_pipeline(&spec, 1.3).unwrap();
            assert!(p.corollary.a_bar.is_finite() && p.corollary.b_bar.is_finite());
        }
    }
}
