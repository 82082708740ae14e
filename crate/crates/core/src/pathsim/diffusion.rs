use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::path::{Interpretation, SampledPath};
use crate::rng::path_rng;

type CoefFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A drift or diffusion coefficient `(t, x) -> f64`.
#[derive(Clone)]
pub enum Coefficient {
    Expr(Expr),
    Native { label: String, f: Arc<CoefFn> },
}

impl Coefficient {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::Expr(Expr::parse(src)?))
    }

    pub fn constant(v: f64) -> Self {
        Self::Expr(Expr::constant(v))
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Native { label: label.into(), f: Arc::new(f) }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Self::Expr(e) => e.eval(t, x),
            Self::Native { f, .. } => f(t, x),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Self::Expr(e) => e.source(),
            Self::Native { label, .. } => label,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({:?})", self.label())
    }
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        self.label() == other.label()
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Self::constant(v)),
            Raw::Text(s) => Self::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// `dX = mu(t, X) dt + sigma(t, X) dW` with `|sigma| <= sigma_max` and
/// `|mu| <= mu_const + mu_lin |x|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSpec {
    pub mu: Coefficient,
    pub sigma: Coefficient,
    #[serde(default)]
    pub mu_const: f64,
    #[serde(default)]
    pub mu_lin: f64,
    pub sigma_max: f64,
    #[serde(default)]
    pub x0: f64,
    pub horizon: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DiffusionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_const >= 0.0 && self.mu_const.is_finite()) {
            return Err(invalid(format!("mu_const must be finite and >= 0, got {}", self.mu_const)));
        }
        if !(self.mu_lin >= 0.0 && self.mu_lin.is_finite()) {
            return Err(invalid(format!("mu_lin must be finite and >= 0, got {}", self.mu_lin)));
        }
        if !(self.sigma_max > 0.0 && self.sigma_max.is_finite()) {
            return Err(invalid(format!("sigma_max must be finite and > 0, got {}", self.sigma_max)));
        }
        if !self.x0.is_finite() {
            return Err(invalid("x0 must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.n == 0 {
            return Err(invalid("grid size n must be >= 1"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }
}

/// Euler–Maruyama path with a cumulative `sum sigma^2 dt` track.
pub fn gen_diffusion(spec: &DiffusionSpec) -> Result<SampledPath> {
    gen_diffusion_seeded(spec, spec.seed)
}

pub(crate) fn gen_diffusion_seeded(spec: &DiffusionSpec, seed: u64) -> Result<SampledPath> {
    spec.validate()?;
    let n = spec.n;
    let dt = spec.dt();
    let sdt = dt.sqrt();
    let mut rng = path_rng(seed);
    let mut values = Vec::with_capacity(n + 1);
    let mut qv = Vec::with_capacity(n + 1);
    let mut x = spec.x0;
    let mut acc = 0.0;
    values.push(x);
    qv.push(0.0);
    for i in 0..n {
        let t = i as f64 * dt;
        let mu = spec.mu.eval(t, x);
        let sigma = spec.sigma.eval(t, x);
        if !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::CoefficientBound { index: i, t, x, detail: format!("mu = {mu}, sigma = {sigma}") });
        }
        if sigma.abs() > spec.sigma_max {
            return Err(Error::CoefficientBound {
                index: i,
                t,
                x,
                detail: format!("|sigma| = {} exceeds sigma_max = {}", sigma.abs(), spec.sigma_max),
            });
        }
        let growth = spec.mu_const + spec.mu_lin * x.abs();
        if mu.abs() > growth {
            return Err(Error::CoefficientBound {
                index: i,
                t,
                x,
                detail: format!("|mu| = {} exceeds mu_const + mu_lin |x| = {growth}", mu.abs()),
            });
        }
        let z: f64 = rng.sample(StandardNormal);
        x += mu * dt + sigma * sdt * z;
        if !x.is_finite() {
            return Err(Error::NonFinite { index: i + 1 });
        }
        acc += sigma * sigma * dt;
        values.push(x);
        qv.push(acc);
    }
    SampledPath::new(0.0, dt, values, Interpretation::PiecewiseLinear)?.with_qv(qv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: &str, sigma: &str) -> DiffusionSpec {
        DiffusionSpec {
            mu: Coefficient::parse(mu).unwrap(),
            sigma: Coefficient::parse(sigma).unwrap(),
            mu_const: 2.0,
            mu_lin: 0.0,
            sigma_max: 1.0,
            x0: 0.0,
            horizon: 1.0,
            n: 100,
            seed: 3,
        }
    }

    #[test]
    fn noiseless_drift_is_a_line() {
        let p = gen_diffusion(&spec("2", "0")).unwrap();
        for (i, v) in p.values().iter().enumerate() {
            assert!((v - 2.0 * p.time(i)).abs() < 1e-12);
        }
        assert!(p.qv().unwrap().iter().all(|&q| q == 0.0));
    }

    #[test]
    fn unit_volatility_qv_is_time() {
        let p = gen_diffusion(&spec("0", "1")).unwrap();
        assert!((p.final_qv().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.values(), gen_diffusion(&spec("0", "1")).unwrap().values());
    }

    #[test]
    fn bound_violation_names_grid_point() {
        let err = gen_diffusion(&spec("0", "1 + t")).unwrap_err();
        match err {
            Error::CoefficientBound { index, .. } => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        let err = gen_diffusion(&spec("3", "0")).unwrap_err();
        assert!(matches!(err, Error::CoefficientBound { index: 0, .. }));
    }

    #[test]
    fn native_coefficients() {
        let mut s = spec("0", "0");
        s.sigma = Coefficient::from_fn("half", |_, _| 0.5);
        let p = gen_diffusion(&s).unwrap();
        assert!((p.final_qv().unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn coefficient_serde_accepts_numbers_and_strings() {
        let c: Coefficient = serde_json::from_str("1.5").unwrap();
        assert_eq!(c.eval(0.0, 0.0), 1.5);
        let c: Coefficient = serde_json::from_str("\"sin(x)\"").unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"sin(x)\"");
    }
}
