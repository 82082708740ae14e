use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pathsim::ProcessSpec;

pub const DEFAULT_GUARD_RATIO: f64 = 10.0;
pub const DEFAULT_LLN_TOLERANCE: f64 = 0.1;
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.1;
/// Default CLT variance window, as multiples of the target `qv/3`.
pub const DEFAULT_VARIANCE_WINDOW: [f64; 2] = [0.75, 1.26];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Lln,
    Clt,
    TailVsBound,
    MgfVsBound,
    ScalingExponent,
    MgfDivergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lln => "lln",
            Self::Clt => "clt",
            Self::TailVsBound => "tail-vs-bound",
            Self::MgfVsBound => "mgf-vs-bound",
            Self::ScalingExponent => "scaling-exponent",
            Self::MgfDivergence => "mgf-divergence",
        }
    }
}

/// A Monte Carlo experiment, read from TOML:
///
/// ```toml
/// kind = "clt"
/// replicates = 2000
/// base_seed = 7
/// c = [0.05]
///
/// [process.fbm]
/// hurst = 0.5
/// horizon = 1.0
/// n = 100000
/// ```
///
/// `c` is a single level for `clt`, `tail-vs-bound`, `mgf-vs-bound` and
/// `mgf-divergence`, and a ladder for `lln` and `scaling-exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub c: Vec<f64>,
    pub process: ProcessSpec,
    /// Tail levels for `tail-vs-bound`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<f64>,
    /// Exponents for `mgf-vs-bound`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_hi: Option<f64>,
    /// LLN final-error tolerance or scaling slope tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_range: Option<[f64; 2]>,
    /// Scaling only: regenerate each rung on a grid with `c / dt^H = grid_ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_ratio: Option<f64>,
    #[serde(default = "default_guard")]
    pub guard_ratio: f64,
}

fn default_guard() -> f64 {
    DEFAULT_GUARD_RATIO
}

fn finite_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML with every defaulted parameter filled in.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment configs serialize to TOML")
    }

    pub fn horizon(&self) -> f64 {
        self.process.horizon()
    }

    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if self.replicates == 0 {
            return Err(invalid("replicates must be >= 1"));
        }
        if self.c.is_empty() {
            return Err(invalid("c must list at least one level"));
        }
        for &c in &self.c {
            finite_positive("c", c)?;
        }
        finite_positive("guard_ratio", self.guard_ratio)?;
        let single = !matches!(self.kind, ExperimentKind::Lln | ExperimentKind::ScalingExponent);
        if single && self.c.len() != 1 {
            return Err(invalid(format!("{} takes a single c, got {}", self.kind.name(), self.c.len())));
        }
        if let Some(t) = self.tolerance {
            finite_positive("tolerance", t)?;
        }
        if self.grid_ratio.is_some() && self.kind != ExperimentKind::ScalingExponent {
            return Err(invalid("grid_ratio applies to scaling-exponent only"));
        }
        match self.kind {
            ExperimentKind::Lln => {}
            ExperimentKind::Clt => {
                self.require_clt_process()?;
                if let Some([lo, hi]) = self.variance_range {
                    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                        return Err(invalid(format!("variance_range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")));
                    }
                }
            }
            ExperimentKind::TailVsBound => {
                self.require_fbm()?;
                if self.u.is_empty() {
                    return Err(invalid("tail-vs-bound needs a u grid"));
                }
                if let Some(u) = self.u.iter().find(|u| !(**u >= 0.0)) {
                    return Err(invalid(format!("u must be >= 0, got {u}")));
                }
            }
            ExperimentKind::MgfVsBound => {
                match &self.process {
                    ProcessSpec::Fbm(s) if s.hurst == 0.5 => {}
                    ProcessSpec::Diffusion(_) => {}
                    _ => return Err(invalid("mgf-vs-bound needs Brownian motion (fbm with hurst = 0.5) or a diffusion")),
                }
                if self.lambda.is_empty() {
                    return Err(invalid("mgf-vs-bound needs a lambda grid"));
                }
                if let Some(l) = self.lambda.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                    return Err(invalid(format!("lambda must be finite and >= 0, got {l}")));
                }
                finite_positive("cap", self.cap.ok_or_else(|| invalid("mgf-vs-bound needs a finite cap"))?)?;
            }
            ExperimentKind::ScalingExponent => {
                let h = self.require_fbm()?;
                if self.c.len() < 2 {
                    return Err(invalid("scaling-exponent needs at least two levels"));
                }
                for &c in &self.c {
                    if self.horizon() * c.powf(-1.0 / h) < 2.0 {
                        return Err(invalid(format!("rung c = {c} violates S c^(-1/H) >= 2")));
                    }
                }
                if let Some(g) = self.grid_ratio {
                    finite_positive("grid_ratio", g)?;
                }
            }
            ExperimentKind::MgfDivergence => {
                if !matches!(self.process, ProcessSpec::Levy(_)) {
                    return Err(invalid("mgf-divergence needs a levy process"));
                }
                finite_positive("cap", self.cap.ok_or_else(|| invalid("mgf-divergence needs a finite cap"))?)?;
                let lo = self.alpha_lo.ok_or_else(|| invalid("mgf-divergence needs alpha_lo"))?;
                let hi = self.alpha_hi.ok_or_else(|| invalid("mgf-divergence needs alpha_hi"))?;
                finite_positive("alpha_lo", lo)?;
                finite_positive("alpha_hi", hi)?;
                if lo >= hi {
                    return Err(invalid(format!("alpha_lo must be below alpha_hi, got {lo} >= {hi}")));
                }
            }
        }
        Ok(())
    }

    fn require_fbm(&self) -> Result<f64> {
        match &self.process {
            ProcessSpec::Fbm(s) => Ok(s.hurst),
            _ => Err(invalid(format!("{} needs an fbm process", self.kind.name()))),
        }
    }

    fn require_clt_process(&self) -> Result<()> {
        match &self.process {
            ProcessSpec::Fbm(s) if s.hurst == 0.5 => Ok(()),
            ProcessSpec::Diffusion(_) => Ok(()),
            _ => Err(invalid("clt verdicts are restricted to Brownian motion and bounded-sigma diffusions")),
        }
    }

    /// The config with every optional kind parameter set to its effective value.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        match self.kind {
            ExperimentKind::Lln => {
                out.tolerance.get_or_insert(DEFAULT_LLN_TOLERANCE);
            }
            ExperimentKind::ScalingExponent => {
                out.tolerance.get_or_insert(DEFAULT_SLOPE_TOLERANCE);
            }
            _ => {}
        }
        out
    }

    pub fn tolerance_or_default(&self) -> f64 {
        self.tolerance.unwrap_or(match self.kind {
            ExperimentKind::ScalingExponent => DEFAULT_SLOPE_TOLERANCE,
            _ => DEFAULT_LLN_TOLERANCE,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLT: &str = "kind = \"clt\"\nreplicates = 10\nbase_seed = 1\nc = [0.1]\n[process.fbm]\nhurst = 0.5\nhorizon = 1.0\nn = 1000\n";

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(CLT).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Clt);
        assert_eq!(cfg.guard_ratio, DEFAULT_GUARD_RATIO);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str(&CLT.replace("replicates = 10", "replicates = 0")).is_err());
        assert!(ExperimentConfig::from_toml_str(&CLT.replace("[0.1]", "[0.1, 0.05]")).is_err());
        assert!(ExperimentConfig::from_toml_str(&CLT.replace("hurst = 0.5", "hurst = 0.7")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("extra = 1\n{CLT}")).is_err());
        let tail = CLT.replace("\"clt\"", "\"tail-vs-bound\"");
        assert!(ExperimentConfig::from_toml_str(&tail).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("u = [1.0]\n{tail}")).is_ok());
    }

    #[test]
    fn scaling_rungs_checked() {
        let s = "kind = \"scaling-exponent\"\nreplicates = 2\nc = [0.9, 0.1]\n[process.fbm]\nhurst = 0.5\nhorizon = 1.0\nn = 100\n";
        assert!(ExperimentConfig::from_toml_str(s).is_err());
        assert!(ExperimentConfig::from_toml_str(&s.replace("0.9", "0.5")).is_ok());
    }

    #[test]
    fn resolved_fills_defaults() {
        let s = "kind = \"lln\"\nreplicates = 2\nc = [0.2, 0.1]\n[process.fbm]\nhurst = 0.5\nhorizon = 1.0\nn = 100\n";
        let cfg = ExperimentConfig::from_toml_str(s).unwrap().resolved();
        assert_eq!(cfg.tolerance, Some(DEFAULT_LLN_TOLERANCE));
    }
}
