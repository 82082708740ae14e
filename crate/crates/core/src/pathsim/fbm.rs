use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::path::{Interpretation, SampledPath};
use crate::rng::path_rng;

/// Largest grid for which a failed circulant embedding falls back to a dense
/// Cholesky factor.
pub const DENSE_FALLBACK_MAX: usize = 4096;
const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbmSpec {
    pub hurst: f64,
    pub horizon: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl FbmSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(invalid(format!("hurst must lie in (0, 1), got {}", self.hurst)));
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

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

enum Method {
    /// `H = 1/2`: independent increments.
    White,
    Circulant { sqrt_eig: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    /// Lower Cholesky factor, row-major.
    Dense { chol: Vec<f64> },
}

/// Reusable fBm generator for one `(H, S, n)`; the spectral factor is
/// computed once and shared by every seed.
pub struct FbmSampler {
    spec: FbmSpec,
    scale: f64,
    method: Method,
}

impl FbmSampler {
    pub fn new(spec: &FbmSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let scale = spec.dt().powf(spec.hurst);
        if spec.hurst == 0.5 || n == 1 {
            return Ok(Self { spec: spec.clone(), scale, method: Method::White });
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let k = if j <= n { j } else { m - j };
                Complex::new(fgn_autocov(spec.hurst, k), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let eig: Vec<f64> = row.iter().map(|z| z.re).collect();
        let max = eig.iter().cloned().fold(0.0, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL * max {
            if n > DENSE_FALLBACK_MAX {
                return Err(Error::Embedding { n, min_eigenvalue: min });
            }
            return Self::dense(spec);
        }
        let sqrt_eig = eig.iter().map(|&l| (l.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self { spec: spec.clone(), scale, method: Method::Circulant { sqrt_eig, fft } })
    }

    /// Exact sampler through a dense Cholesky factor of the increment covariance.
    pub fn dense(spec: &FbmSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        if n > DENSE_FALLBACK_MAX {
            return Err(invalid(format!("dense fBm factor limited to n <= {DENSE_FALLBACK_MAX}")));
        }
        let gamma: Vec<f64> = (0..n).map(|k| fgn_autocov(spec.hurst, k)).collect();
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = gamma[i - j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::Embedding { n, min_eigenvalue: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { spec: spec.clone(), scale: spec.dt().powf(spec.hurst), method: Method::Dense { chol: l } })
    }

    pub fn spec(&self) -> &FbmSpec {
        &self.spec
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.method, Method::Dense { .. })
    }

    /// Increments of the path, in path units.
    pub fn increments(&self, seed: u64) -> Vec<f64> {
        let n = self.spec.n;
        let mut rng = path_rng(seed);
        let mut out: Vec<f64> = match &self.method {
            Method::White => (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            Method::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        Complex::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|z| z.re).collect()
            }
            Method::Dense { chol } => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n).map(|i| (0..=i).map(|k| chol[i * n + k] * z[k]).sum()).collect()
            }
        };
        for v in &mut out {
            *v *= self.scale;
        }
        out
    }

    pub fn sample(&self, seed: u64) -> Result<SampledPath> {
        let inc = self.increments(seed);
        let mut values = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for d in inc {
            acc += d;
            values.push(acc);
        }
        let dt = self.spec.dt();
        let path = SampledPath::new(0.0, dt, values, Interpretation::PiecewiseLinear)?;
        if self.spec.hurst == 0.5 {
            let qv = (0..=self.spec.n).map(|i| i as f64 * dt).collect();
            return path.with_qv(qv);
        }
        Ok(path)
    }
}

/// Fractional Brownian motion on `[0, S]` with `n` steps, starting at 0.
pub fn gen_fbm(spec: &FbmSpec) -> Result<SampledPath> {
    FbmSampler::new(spec)?.sample(spec.seed)
}
