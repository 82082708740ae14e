//! Tail and exponential-moment bounds for the truncated variation of fBm,
//! Brownian motion and bounded diffusions.
//!
//! The constants are large (`K1` alone is of order `10^6` at `q = 1/2`), so
//! MGF bounds are carried as natural logarithms.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::chain::{optimized_pipeline, Pipeline};
use super::orlicz::orlicz_spec;
use super::scale::{subgaussian_orlicz_scale, TailModel};
use crate::error::{invalid, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Constants entering the fBm tail bound at Hurst index `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmConstants {
    pub hurst: f64,
    pub scale_c: f64,
    pub pipeline: Pipeline,
    /// `A_H`, `B_H`, `C_H`.
    pub a_h: f64,
    pub b_h: f64,
    pub c_h: f64,
}

pub fn fbm_constants(hurst: f64) -> Result<FbmConstants> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(invalid(format!("hurst must lie in (0, 1), got {hurst}")));
    }
    let scale_c = subgaussian_orlicz_scale(TailModel::Gaussian, 1.0)?;
    let pipeline = optimized_pipeline(&orlicz_spec(2.0, hurst)?, scale_c)?;
    let co = pipeline.corollary;
    Ok(FbmConstants { hurst, scale_c, pipeline, a_h: co.a_bar, b_h: co.b_bar, c_h: co.d_bar })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub u: f64,
    pub threshold: f64,
    pub prob_bound: f64,
}

impl FbmConstants {
    /// `P(TV^c(W_H, S) >= c^{(H-1)/H} S (A_H + B_H u)) <= min(1, C_H e^{-u^{2H}})`.
    pub fn tail(&self, horizon: f64, c: f64, u: f64) -> Result<TailBound> {
        positive("horizon", horizon)?;
        positive("c", c)?;
        if !(u >= 0.0) {
            return Err(invalid(format!("u must be >= 0, got {u}")));
        }
        let h = self.hurst;
        let threshold = c.powf((h - 1.0) / h) * horizon * (self.a_h + self.b_h * u);
        let prob_bound = (self.c_h * (-u.powf(2.0 * h)).exp()).min(1.0);
        Ok(TailBound { u, threshold, prob_bound })
    }
}

pub fn fbm_tail_bound(hurst: f64, horizon: f64, c: f64, u: f64) -> Result<TailBound> {
    fbm_constants(hurst)?.tail(horizon, c, u)
}

/// `alpha = 2 B_bar` and `beta = A_bar + 2 ln2 B_bar` at `p = 2`, `q = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfCoefficients {
    pub scale_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub pipeline: Pipeline,
}

pub fn mgf_coefficients(model: TailModel, variance: f64) -> Result<MgfCoefficients> {
    let scale_c = subgaussian_orlicz_scale(model, variance)?;
    let pipeline = optimized_pipeline(&orlicz_spec(2.0, 0.5)?, scale_c)?;
    let co = pipeline.corollary;
    Ok(MgfCoefficients { scale_c, alpha: 2.0 * co.b_bar, beta: co.a_bar + 2.0 * LN_2 * co.b_bar, pipeline })
}

/// A bound carried in log space; `value` is `inf` once it overflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfBound {
    pub lambda: f64,
    pub ln_value: f64,
    pub value: f64,
}

impl MgfBound {
    fn from_ln(lambda: f64, ln_value: f64) -> Self {
        Self { lambda, ln_value, value: ln_value.exp() }
    }
}

impl MgfCoefficients {
    /// `2 exp(lambda^2 S alpha + lambda S beta / c)`.
    pub fn bm(&self, horizon: f64, c: f64, lambda: f64) -> Result<MgfBound> {
        positive("horizon", horizon)?;
        positive("c", c)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        let ln = LN_2 + lambda * lambda * horizon * self.alpha + lambda * horizon * self.beta / c;
        Ok(MgfBound::from_ln(lambda, ln))
    }
}

/// Bound on `E exp(lambda TV^c(W, S))` for standard Brownian motion.
pub fn bm_mgf_bound(horizon: f64, c: f64, lambda: f64) -> Result<MgfBound> {
    mgf_coefficients(TailModel::Gaussian, 1.0)?.bm(horizon, c, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionBoundParams {
    /// Bound `R` on `|sigma|`.
    pub sigma_max: f64,
    /// `C` and `D` in `|mu(t, x)| <= C + D |x|`.
    pub mu_const: f64,
    pub mu_lin: f64,
    pub x0: f64,
    pub horizon: f64,
    pub c: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionDerived {
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub alpha_r: f64,
    pub beta_r: f64,
}

impl DiffusionBoundParams {
    pub fn validate(&self) -> Result<()> {
        positive("sigma_max", self.sigma_max)?;
        positive("horizon", self.horizon)?;
        positive("c", self.c)?;
        for (name, v) in [("mu_const", self.mu_const), ("mu_lin", self.mu_lin), ("lambda", self.lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.x0.is_finite() {
            return Err(invalid("x0 must be finite"));
        }
        Ok(())
    }

    /// `gamma = (C + D|x0|) S e^{DS}`, `delta = D S e^{DS}`, `eta = delta R sqrt(S/2)`,
    /// with `alpha_R`, `beta_R` from the tail-only scale at variance `R^2`.
    pub fn derived_with(&self, coeffs: &MgfCoefficients) -> DiffusionDerived {
        let s = self.horizon;
        let growth = (self.mu_lin * s).exp();
        let delta = self.mu_lin * s * growth;
        DiffusionDerived {
            gamma: (self.mu_const + self.mu_lin * self.x0.abs()) * s * growth,
            delta,
            eta: delta * self.sigma_max * (s / 2.0).sqrt(),
            alpha_r: coeffs.alpha,
            beta_r: coeffs.beta,
        }
    }

    pub fn coefficients(&self) -> Result<MgfCoefficients> {
        mgf_coefficients(TailModel::TailOnly, self.sigma_max * self.sigma_max)
    }

    pub fn derived(&self) -> Result<DiffusionDerived> {
        Ok(self.derived_with(&self.coefficients()?))
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `2 exp(l^2 S alpha_R + l S beta_R / c + l gamma) (1 + 8 l eta exp(l^2 eta^2))`.
/// With `D = 0` this is `2 exp(l^2 S alpha_R + l S (beta_R / c + C))`.
pub fn diffusion_mgf_bound_with(params: &DiffusionBoundParams, d: &DiffusionDerived) -> Result<MgfBound> {
    params.validate()?;
    let (l, s) = (params.lambda, params.horizon);
    let mut ln = LN_2 + l * l * s * d.alpha_r + l * s * d.beta_r / params.c + l * d.gamma;
    if l > 0.0 && d.eta > 0.0 {
        ln += softplus((8.0 * l * d.eta).ln() + l * l * d.eta * d.eta);
    }
    Ok(MgfBound::from_ln(l, ln))
}

pub fn diffusion_mgf_bound(params: &DiffusionBoundParams) -> Result<MgfBound> {
    params.validate()?;
    diffusion_mgf_bound_with(params, &params.derived()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_mgf_at_zero_lambda() {
        let b = bm_mgf_bound(1.0, 0.1, 0.0).unwrap();
        assert_eq!(b.value, 2.0);
    }

    #[test]
    fn brownian_mgf_monotone() {
        let co = mgf_coefficients(TailModel::Gaussian, 1.0).unwrap();
        let a = co.bm(1.0, 0.1, 0.5).unwrap().ln_value;
        let b = co.bm(1.0, 0.1, 1.0).unwrap().ln_value;
        let c = co.bm(1.0, 0.05, 1.0).unwrap().ln_value;
        assert!(a < b && b < c);
        let want = LN_2 + co.alpha + 10.0 * co.beta;
        assert!((b - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn tail_bound_shape() {
        let k = fbm_constants(0.5).unwrap();
        assert_eq!(k.c_h, 1.0);
        assert!((k.tail(1.0, 0.1, 1e-12).unwrap().prob_bound - 1.0).abs() < 1e-9);
        let t0 = k.tail(1.0, 0.1, 0.0).unwrap().threshold;
        let t1 = k.tail(1.0, 0.1, 1.0).unwrap().threshold;
        assert!(((t1 - t0) - 10.0 * k.b_h).abs() <= 1e-12 * t1);
        assert!(fbm_constants(0.3).unwrap().c_h > 1.0);
        assert_eq!(fbm_constants(0.7).unwrap().c_h, 1.0);
    }

    #[test]
    fn diffusion_derived_values() {
        let p = DiffusionBoundParams {
            sigma_max: 1.0,
            mu_const: 0.0,
            mu_lin: 0.5,
            x0: 1.0,
            horizon: 1.0,
            c: 0.1,
            lambda: 1.0,
        };
        let d = p.derived().unwrap();
        let e = 0.5 * 0.5f64.exp();
        assert!((d.gamma - e).abs() < 1e-15);
        assert!((d.delta - e).abs() < 1e-15);
        assert!((d.eta - e * 0.5f64.sqrt()).abs() < 1e-15);
        assert!((d.eta - 0.5829).abs() < 1e-4);
    }

    #[test]
    fn diffusion_reductions() {
        let p = DiffusionBoundParams {
            sigma_max: 1.0,
            mu_const: 0.0,
            mu_lin: 0.0,
            x0: 3.0,
            horizon: 1.0,
            c: 0.1,
            lambda: 0.7,
        };
        let co = p.coefficients().unwrap();
        let b = diffusion_mgf_bound(&p).unwrap();
        assert!((b.ln_value - co.bm(1.0, 0.1, 0.7).unwrap().ln_value).abs() < 1e-12 * b.ln_value);
        let q = DiffusionBoundParams { mu_const: 1.0, ..p };
        let red = LN_2 + 0.49 * co.alpha + 0.7 * (co.beta / 0.1 + 1.0);
        assert!((diffusion_mgf_bound(&q).unwrap().ln_value - red).abs() < 1e-12 * red);
        assert_eq!(diffusion_mgf_bound(&DiffusionBoundParams { lambda: 0.0, ..q }).unwrap().value, 2.0);
    }
}
