//! Lévy paths from a generating triplet `(A, nu, gamma)` with truncation
//! function `1{|x| <= 1}`.
//!
//! Jumps larger than `eps` are simulated exactly as a compound Poisson
//! process; smaller ones are replaced by a Gaussian with the same variance.
//! Jump times are binned to grid cells, so several jumps in one cell are
//! recorded as a single jump at the cell's right end.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::path::{Interpretation, SampledPath};
use crate::quad;
use crate::rng::{path_rng, PathRng};

pub const DEFAULT_EPS: f64 = 1e-3;
const RATE_WARNING: f64 = 0.1;
const MAX_EXPECTED_JUMPS: f64 = 1e9;
const TABLE_NODES: usize = 4096;
const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpMeasure {
    #[default]
    None,
    /// Finitely many atoms, each `[size, rate]`.
    Discrete { atoms: Vec<[f64; 2]> },
    TemperedStable {
        alpha_p: f64,
        alpha_n: f64,
        lambda_p: f64,
        lambda_n: f64,
        c_p: f64,
        c_n: f64,
    },
    Meixner { delta: f64, eta: f64, beta: f64 },
}

/// One half-line of an absolutely continuous measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Pos,
    Neg,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Pos => 1.0,
            Side::Neg => -1.0,
        }
    }
}

impl JumpMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpMeasure::None => Ok(()),
            JumpMeasure::Discrete { ref atoms } => {
                for (i, &[size, rate]) in atoms.iter().enumerate() {
                    if !size.is_finite() || size == 0.0 {
                        return Err(invalid(format!("atom {i}: size must be finite and nonzero, got {size}")));
                    }
                    if !(rate >= 0.0 && rate.is_finite()) {
                        return Err(invalid(format!("atom {i}: rate must be finite and >= 0, got {rate}")));
                    }
                }
                Ok(())
            }
            JumpMeasure::TemperedStable { alpha_p, alpha_n, lambda_p, lambda_n, c_p, c_n } => {
                for (name, a) in [("alpha_p", alpha_p), ("alpha_n", alpha_n)] {
                    if !(a < 2.0 && a.is_finite()) {
                        return Err(invalid(format!("{name} must be finite and < 2, got {a}")));
                    }
                }
                for (name, v) in [("lambda_p", lambda_p), ("lambda_n", lambda_n), ("c_p", c_p), ("c_n", c_n)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
                    }
                }
                Ok(())
            }
            JumpMeasure::Meixner { delta, eta, beta } => {
                if !(delta > 0.0 && delta.is_finite() && eta > 0.0 && eta.is_finite()) {
                    return Err(invalid("meixner delta and eta must be finite and > 0"));
                }
                if !(beta.abs() < PI) {
                    return Err(invalid(format!("meixner |beta| must be < pi, got {beta}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        matches!(self, JumpMeasure::TemperedStable { .. } | JumpMeasure::Meixner { .. })
    }

    /// Density at `sign·y`, `y > 0`, for absolutely continuous measures.
    pub fn side_density(&self, side: Side, y: f64) -> f64 {
        self.ln_side_density(side, y).exp()
    }

    /// Natural log of [`Self::side_density`]; `-inf` where the density vanishes.
    pub fn ln_side_density(&self, side: Side, y: f64) -> f64 {
        match *self {
            JumpMeasure::TemperedStable { alpha_p, alpha_n, lambda_p, lambda_n, c_p, c_n } => {
                let (a, l, c) = match side {
                    Side::Pos => (alpha_p, lambda_p, c_p),
                    Side::Neg => (alpha_n, lambda_n, c_n),
                };
                c.ln() - (1.0 + a) * y.ln() - l * y
            }
            JumpMeasure::Meixner { delta, eta, beta } => {
                let z = PI * y / eta;
                delta.ln() + side.sign() * beta * y / eta - y.ln() - ln_sinh(z)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    /// `alpha y + ln density(sign·y)` with the linear terms combined before
    /// adding, so large `y` near the moment threshold does not cancel.
    pub fn ln_tilted_side_density(&self, side: Side, y: f64, alpha: f64) -> f64 {
        match *self {
            JumpMeasure::TemperedStable { alpha_p, alpha_n, lambda_p, lambda_n, c_p, c_n } => {
                let (a, l, c) = match side {
                    Side::Pos => (alpha_p, lambda_p, c_p),
                    Side::Neg => (alpha_n, lambda_n, c_n),
                };
                (alpha - l) * y + c.ln() - (1.0 + a) * y.ln()
            }
            JumpMeasure::Meixner { delta, eta, beta } => {
                let z = PI * y / eta;
                if z > 20.0 {
                    let slope = alpha + (side.sign() * beta - PI) / eta;
                    slope * y + delta.ln() + std::f64::consts::LN_2 - y.ln() - (-(2.0 * z)).exp().ln_1p()
                } else {
                    alpha * y + self.ln_side_density(side, y)
                }
            }
            _ => f64::NEG_INFINITY,
        }
    }

    /// `y^2` times the side density, finite as `y -> 0`.
    fn side_second(&self, side: Side, y: f64) -> f64 {
        if y == 0.0 {
            return match *self {
                JumpMeasure::Meixner { delta, eta, .. } => delta * eta / PI,
                _ => 0.0,
            };
        }
        (2.0 * y.ln() + self.ln_side_density(side, y)).exp()
    }

    /// Exponential-moment threshold: `∫_{|x|>1} e^{a|x|} nu(dx)` is finite
    /// for `a` below it and infinite above.
    pub fn exp_moment_threshold(&self) -> f64 {
        match *self {
            JumpMeasure::None | JumpMeasure::Discrete { .. } => f64::INFINITY,
            JumpMeasure::TemperedStable { lambda_p, lambda_n, .. } => lambda_p.min(lambda_n),
            JumpMeasure::Meixner { eta, beta, .. } => (PI - beta.abs()) / eta,
        }
    }

    /// Exponential tail rate of one side (`inf` for bounded support).
    pub fn side_decay(&self, side: Side) -> f64 {
        match *self {
            JumpMeasure::TemperedStable { lambda_p, lambda_n, .. } => match side {
                Side::Pos => lambda_p,
                Side::Neg => lambda_n,
            },
            JumpMeasure::Meixner { eta, beta, .. } => (PI - side.sign() * beta) / eta,
            _ => f64::INFINITY,
        }
    }

    /// `∫_{|x| <= eps} x^2 nu(dx)`.
    pub fn small_jump_variance(&self, eps: f64) -> Result<f64> {
        match self {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::Discrete { atoms } => {
                Ok(atoms.iter().filter(|a| a[0].abs() <= eps).map(|a| a[0] * a[0] * a[1]).sum())
            }
            _ => {
                let mut total = 0.0;
                for side in [Side::Pos, Side::Neg] {
                    // y = eps s^m flattens the y^{1-alpha} singularity at 0.
                    let m = match self.side_power(side) {
                        Some(a) if a > 0.0 => 1.0 / (2.0 - a),
                        _ => 1.0,
                    };
                    let f = |s: f64| {
                        if s <= 0.0 {
                            return 0.0;
                        }
                        let y = eps * s.powf(m);
                        self.side_second(side, y) * eps * m * s.powf(m - 1.0)
                    };
                    total += quad::integrate(f, 0.0, 1.0, 0.0, QUAD_TOL)?;
                }
                Ok(total)
            }
        }
    }

    fn side_power(&self, side: Side) -> Option<f64> {
        match *self {
            JumpMeasure::TemperedStable { alpha_p, alpha_n, .. } => Some(match side {
                Side::Pos => alpha_p,
                Side::Neg => alpha_n,
            }),
            _ => None,
        }
    }

    /// `∫ x^2 nu(dx)` over the whole line.
    pub fn second_moment(&self) -> Result<f64> {
        match self {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::Discrete { atoms } => Ok(atoms.iter().map(|a| a[0] * a[0] * a[1]).sum()),
            _ => {
                let mut total = self.small_jump_variance(1.0)?;
                for side in [Side::Pos, Side::Neg] {
                    total += quad::integrate_to_infinity(|y| self.side_second(side, y), 1.0, 1.0, QUAD_TOL)?;
                }
                Ok(total)
            }
        }
    }
}

/// `ln sinh z` for `z > 0` without overflow.
pub fn ln_sinh(z: f64) -> f64 {
    if z > 20.0 {
        z - std::f64::consts::LN_2 + (-(2.0 * z)).exp().ln_1p()
    } else {
        z.sinh().ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub a: f64,
    pub gamma: f64,
    pub nu: JumpMeasure,
    pub eps: f64,
}

impl LevyTriplet {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(invalid(format!("Gaussian variance A must be finite and >= 0, got {}", self.a)));
        }
        if !self.gamma.is_finite() {
            return Err(invalid("drift gamma must be finite"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.nu.is_absolutely_continuous() && self.eps >= 1.0 {
            return Err(invalid(format!(
                "eps = {} must be < 1 for infinite-activity measures (compensation uses 1{{|x| <= 1}})",
                self.eps
            )));
        }
        self.nu.validate()
    }
}

/// TOML/JSON form: the triplet plus grid and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySpec {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub nu: JumpMeasure,
    pub horizon: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl LevySpec {
    pub fn triplet(&self) -> LevyTriplet {
        LevyTriplet { a: self.a, gamma: self.gamma, nu: self.nu.clone(), eps: self.eps }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }
}

enum JumpSizes {
    /// Density `∝ y^{-1-alpha} e^{-lambda y}` on `y > eps`.
    Tempered { alpha: f64, lambda: f64, eps: f64, gamma: Option<Gamma<f64>> },
    /// Inverse CDF by linear interpolation between `(cdf[k], nodes[k])`.
    Table { nodes: Vec<f64>, cdf: Vec<f64> },
}

impl JumpSizes {
    fn sample(&self, rng: &mut PathRng) -> f64 {
        match self {
            JumpSizes::Tempered { alpha, lambda, eps, gamma } => loop {
                if let Some(g) = gamma {
                    let y = g.sample(rng);
                    if y > *eps {
                        return y;
                    }
                } else if *alpha > 0.0 {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let y = eps * u.powf(-1.0 / alpha);
                    if rng.random::<f64>() < (-lambda * (y - eps)).exp() {
                        return y;
                    }
                } else {
                    let e: f64 = rng.sample(rand_distr::Exp1);
                    let y = eps + e / lambda;
                    if rng.random::<f64>() < (y / eps).powf(-1.0 - alpha) {
                        return y;
                    }
                }
            },
            JumpSizes::Table { nodes, cdf } => {
                let total = *cdf.last().expect("nonempty table");
                let u = rng.random::<f64>() * total;
                let k = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[k - 1], cdf[k]);
                let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                nodes[k - 1] + w * (nodes[k] - nodes[k - 1])
            }
        }
    }
}

struct SideSampler {
    rate: f64,
    sign: f64,
    sizes: JumpSizes,
}

enum JumpSource {
    None,
    Atoms { sizes: Vec<f64>, cum_rates: Vec<f64> },
    Sides(Vec<SideSampler>),
}

/// Precomputed rates, compensator and jump-size samplers for one
/// `(triplet, S, n)`; shared across seeds.
pub struct LevySampler {
    triplet: LevyTriplet,
    horizon: f64,
    n: usize,
    drift: f64,
    gauss_var: f64,
    total_rate: f64,
    jumps: JumpSource,
}

impl LevySampler {
    pub fn new(triplet: &LevyTriplet, horizon: f64, n: usize) -> Result<Self> {
        triplet.validate()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be > 0, got {horizon}")));
        }
        if n == 0 {
            return Err(invalid("grid size n must be >= 1"));
        }
        let eps = triplet.eps;
        let (compensator, small_var, jumps) = match &triplet.nu {
            JumpMeasure::None => (0.0, 0.0, JumpSource::None),
            JumpMeasure::Discrete { atoms } => {
                let live: Vec<[f64; 2]> = atoms.iter().copied().filter(|a| a[1] > 0.0).collect();
                let comp = live.iter().filter(|a| a[0].abs() <= 1.0).map(|a| a[0] * a[1]).sum();
                let mut acc = 0.0;
                let cum_rates = live
                    .iter()
                    .map(|a| {
                        acc += a[1];
                        acc
                    })
                    .collect();
                let sizes = live.iter().map(|a| a[0]).collect();
                (comp, 0.0, JumpSource::Atoms { sizes, cum_rates })
            }
            nu => {
                let mut comp = 0.0;
                let mut sides = Vec::with_capacity(2);
                for side in [Side::Pos, Side::Neg] {
                    let first = quad::integrate(|y| y * nu.side_density(side, y), eps, 1.0, 0.0, QUAD_TOL)?;
                    comp += side.sign() * first;
                    let (rate, sizes) = side_sizes(nu, side, eps)?;
                    if rate > 0.0 {
                        sides.push(SideSampler { rate, sign: side.sign(), sizes });
                    }
                }
                (comp, nu.small_jump_variance(eps)?, JumpSource::Sides(sides))
            }
        };
        let total_rate = match &jumps {
            JumpSource::None => 0.0,
            JumpSource::Atoms { cum_rates, .. } => cum_rates.last().copied().unwrap_or(0.0),
            JumpSource::Sides(s) => s.iter().map(|s| s.rate).sum(),
        };
        if total_rate * horizon > MAX_EXPECTED_JUMPS {
            return Err(invalid(format!(
                "expected {:e} jumps above eps; raise eps or shorten the horizon",
                total_rate * horizon
            )));
        }
        Ok(Self {
            triplet: triplet.clone(),
            horizon,
            n,
            drift: triplet.gamma - compensator,
            gauss_var: triplet.a + small_var,
            total_rate,
            jumps,
        })
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// Rate of jumps simulated exactly.
    pub fn jump_rate(&self) -> f64 {
        self.total_rate
    }

    /// Drift of the simulated path between jumps, after compensation.
    pub fn effective_drift(&self) -> f64 {
        self.drift
    }

    /// Variance rate of the Gaussian part, `A + sigma^2(eps)`.
    pub fn gaussian_variance(&self) -> f64 {
        self.gauss_var
    }

    pub fn sample(&self, seed: u64) -> Result<SampledPath> {
        let n = self.n;
        let dt = self.dt();
        let sd = (self.gauss_var * dt).sqrt();
        let mut rng = path_rng(seed);
        let mut inc: Vec<f64> = if sd > 0.0 {
            (0..n).map(|_| self.drift * dt + sd * rng.sample::<f64, _>(StandardNormal)).collect()
        } else {
            vec![self.drift * dt; n]
        };
        let mut sq = vec![0.0f64; n];
        let mut hits = vec![0u32; n];
        if self.total_rate > 0.0 {
            let count = Poisson::new(self.total_rate * self.horizon)
                .map_err(|e| invalid(format!("jump count: {e}")))?
                .sample(&mut rng) as u64;
            for _ in 0..count {
                let cell = ((rng.random::<f64>() * n as f64) as usize).min(n - 1);
                let size = self.jump_size(&mut rng);
                inc[cell] += size;
                sq[cell] += size * size;
                hits[cell] += 1;
            }
        }
        let mut values = Vec::with_capacity(n + 1);
        let mut qv = Vec::with_capacity(n + 1);
        let (mut x, mut q) = (0.0, 0.0);
        values.push(x);
        qv.push(q);
        for k in 0..n {
            x += inc[k];
            q += self.gauss_var * dt + sq[k];
            values.push(x);
            qv.push(q);
        }
        let mut path = SampledPath::new(0.0, dt, values, Interpretation::CadlagStep)?.with_qv(qv)?;
        if self.total_rate * dt >= RATE_WARNING {
            path.push_warning(format!(
                "dt * jump rate = {:.3} >= {RATE_WARNING}: jumps sharing a grid cell are merged",
                self.total_rate * dt
            ));
        }
        let merged = hits.iter().filter(|&&h| h > 1).count();
        if merged > 0 {
            path.push_warning(format!("{merged} grid cell(s) received more than one jump"));
        }
        Ok(path)
    }

    fn jump_size(&self, rng: &mut PathRng) -> f64 {
        match &self.jumps {
            JumpSource::None => 0.0,
            JumpSource::Atoms { sizes, cum_rates } => {
                let u = rng.random::<f64>() * cum_rates[cum_rates.len() - 1];
                let k = cum_rates.partition_point(|&c| c <= u).min(sizes.len() - 1);
                sizes[k]
            }
            JumpSource::Sides(sides) => {
                let u = rng.random::<f64>() * self.total_rate;
                let s = if sides.len() > 1 && u >= sides[0].rate { &sides[1] } else { &sides[0] };
                s.sign * s.sizes.sample(rng)
            }
        }
    }
}

fn side_sizes(nu: &JumpMeasure, side: Side, eps: f64) -> Result<(f64, JumpSizes)> {
    match *nu {
        JumpMeasure::TemperedStable { .. } => {
            let (alpha, lambda) = match (nu, side) {
                (&JumpMeasure::TemperedStable { alpha_p, lambda_p, .. }, Side::Pos) => (alpha_p, lambda_p),
                (&JumpMeasure::TemperedStable { alpha_n, lambda_n, .. }, _) => (alpha_n, lambda_n),
                _ => unreachable!(),
            };
            let rate = quad::integrate_to_infinity(|y| nu.side_density(side, y), eps, eps, QUAD_TOL)?;
            let gamma = if alpha < -1.0 {
                Some(Gamma::new(-alpha, 1.0 / lambda).map_err(|e| invalid(format!("gamma sampler: {e}")))?)
            } else {
                None
            };
            Ok((rate, JumpSizes::Tempered { alpha, lambda, eps, gamma }))
        }
        _ => {
            let decay = nu.side_decay(side);
            let top = (eps * 2.0).max(1.0 + 40.0 / decay);
            let ratio = (top / eps).powf(1.0 / TABLE_NODES as f64);
            let nodes: Vec<f64> = (0..=TABLE_NODES).map(|k| eps * ratio.powi(k as i32)).collect();
            let mut cdf = Vec::with_capacity(nodes.len());
            let mut acc = 0.0;
            cdf.push(0.0);
            for w in nodes.windows(2) {
                acc += quad::integrate(|y| nu.side_density(side, y), w[0], w[1], 0.0, QUAD_TOL)?;
                cdf.push(acc);
            }
            Ok((acc, JumpSizes::Table { nodes, cdf }))
        }
    }
}

/// Lévy path on `[0, S]` with `n` steps, cadlag-step interpretation.
pub fn gen_levy(triplet: &LevyTriplet, horizon: f64, n: usize, seed: u64) -> Result<SampledPath> {
    LevySampler::new(triplet, horizon, n)?.sample(seed)
}
