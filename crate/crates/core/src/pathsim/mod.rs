//! Path generators on uniform grids. Every generator is a pure function of
//! its spec and seed.

mod diffusion;
mod fbm;
mod levy;

pub use diffusion::{gen_diffusion, Coefficient, DiffusionSpec};
pub use fbm::{fgn_autocov, gen_fbm, FbmSampler, FbmSpec, DENSE_FALLBACK_MAX};
pub use levy::{gen_levy, ln_sinh, JumpMeasure, LevySampler, LevySpec, LevyTriplet, Side, DEFAULT_EPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::SampledPath;

/// One of the three process families, as read from a `[fbm]`, `[diffusion]`
/// or `[levy]` TOML section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessSpec {
    Fbm(FbmSpec),
    Diffusion(DiffusionSpec),
    Levy(LevySpec),
}

impl ProcessSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("process specs serialize to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fbm(s) => s.validate(),
            Self::Diffusion(s) => s.validate(),
            Self::Levy(s) => {
                s.triplet().validate()?;
                if s.n == 0 || !(s.horizon > 0.0) {
                    return Err(crate::error::invalid("levy needs n >= 1 and horizon > 0"));
                }
                Ok(())
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Fbm(_) => "fbm",
            Self::Diffusion(_) => "diffusion",
            Self::Levy(_) => "levy",
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Self::Fbm(s) => s.horizon,
            Self::Diffusion(s) => s.horizon,
            Self::Levy(s) => s.horizon,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Fbm(s) => s.n,
            Self::Diffusion(s) => s.n,
            Self::Levy(s) => s.n,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Fbm(s) => s.seed,
            Self::Diffusion(s) => s.seed,
            Self::Levy(s) => s.seed,
        }
    }

    /// Same process on a different grid.
    pub fn with_grid(&self, n: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Fbm(s) => s.n = n,
            Self::Diffusion(s) => s.n = n,
            Self::Levy(s) => s.n = n,
        }
        out
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Fbm(s) => s.seed = seed,
            Self::Diffusion(s) => s.seed = seed,
            Self::Levy(s) => s.seed = seed,
        }
        out
    }

    /// Typical size of one grid increment: `dt^H` for fBm, `sigma_max sqrt(dt)`
    /// for diffusions and the Gaussian part of a Lévy process.
    pub fn increment_scale(&self) -> Result<f64> {
        Ok(match self {
            Self::Fbm(s) => s.dt().powf(s.hurst),
            Self::Diffusion(s) => s.sigma_max * s.dt().sqrt(),
            Self::Levy(s) => {
                let var = s.a + s.nu.small_jump_variance(s.eps)?;
                (var * s.dt()).sqrt()
            }
        })
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match self {
            Self::Fbm(s) => Sampler::Fbm(FbmSampler::new(s)?),
            Self::Diffusion(s) => Sampler::Diffusion(s.clone()),
            Self::Levy(s) => Sampler::Levy(LevySampler::new(&s.triplet(), s.horizon, s.n)?),
        })
    }

    /// Generate with the stored seed.
    pub fn generate(&self) -> Result<SampledPath> {
        self.sampler()?.sample(self.seed())
    }
}

/// Prepared generator; reuse across seeds to amortize setup.
pub enum Sampler {
    Fbm(FbmSampler),
    Diffusion(DiffusionSpec),
    Levy(LevySampler),
}

impl Sampler {
    pub fn sample(&self, seed: u64) -> Result<SampledPath> {
        match self {
            Self::Fbm(s) => s.sample(seed),
            Self::Diffusion(s) => diffusion::gen_diffusion_seeded(s, seed),
            Self::Levy(s) => s.sample(seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_section() {
        let f = ProcessSpec::from_toml_str("[fbm]\nhurst = 0.7\nhorizon = 1.0\nn = 64\nseed = 3\n").unwrap();
        assert_eq!(f.kind(), "fbm");
        let d = ProcessSpec::from_toml_str(
            "[diffusion]\nmu = \"sin(x)\"\nsigma = 1\nmu_const = 1\nsigma_max = 1\nhorizon = 1\nn = 10\n",
        )
        .unwrap();
        assert_eq!(d.kind(), "diffusion");
        let l = ProcessSpec::from_toml_str(
            "[levy]\na = 0.0\nhorizon = 1.0\nn = 100\n[levy.nu]\nkind = \"tempered-stable\"\nalpha_p = 1.2\nalpha_n = 1.2\nlambda_p = 2\nlambda_n = 2\nc_p = 1\nc_n = 1\n",
        )
        .unwrap();
        match &l {
            ProcessSpec::Levy(s) => assert_eq!(s.eps, DEFAULT_EPS),
            _ => panic!(),
        }
        for spec in [f, d, l] {
            assert_eq!(ProcessSpec::from_toml_str(&spec.to_toml_string()).unwrap(), spec);
        }
    }

    #[test]
    fn rejects_malformed_sections() {
        assert!(ProcessSpec::from_toml_str("").is_err());
        assert!(ProcessSpec::from_toml_str("[fbm]\nhurst = 0.5\nhorizon = 1\n").is_err());
        assert!(ProcessSpec::from_toml_str("[fbm]\nhurst = 1.5\nhorizon = 1\nn = 4\n").is_err());
        assert!(ProcessSpec::from_toml_str("[fbm]\nhurst = 0.5\nhorizon = 1\nn = 4\nbogus = 1\n").is_err());
        assert!(ProcessSpec::from_toml_str("[diffusion]\nmu = \"x +\"\nsigma = 1\nsigma_max = 1\nhorizon = 1\nn = 4\n").is_err());
    }

    #[test]
    fn same_seed_same_path_across_families() {
        for text in [
            "[fbm]\nhurst = 0.3\nhorizon = 1.0\nn = 50\nseed = 9\n",
            "[diffusion]\nmu = \"0\"\nsigma = 1\nsigma_max = 1\nhorizon = 1\nn = 50\nseed = 9\n",
            "[levy]\na = 1\nhorizon = 1\nn = 50\nseed = 9\n[levy.nu]\nkind = \"discrete\"\natoms = [[0.5, 3.0], [-1.5, 1.0]]\n",
        ] {
            let s = ProcessSpec::from_toml_str(text).unwrap();
            assert_eq!(s.generate().unwrap().values(), s.generate().unwrap().values());
        }
    }
}
