use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::report::float;
use crate::sum::compensated_sum;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    #[serde(with = "float")]
    pub mean: f64,
    /// Unbiased sample variance (0 for a single sample).
    #[serde(with = "float")]
    pub variance: f64,
    #[serde(with = "float")]
    pub std_error: f64,
    #[serde(with = "float")]
    pub skewness: f64,
    #[serde(with = "float")]
    pub excess_kurtosis: f64,
}

impl Moments {
    /// Two-pass moments with compensated sums, in slice order.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { count: 0, mean: f64::NAN, variance: f64::NAN, std_error: f64::NAN, skewness: f64::NAN, excess_kurtosis: f64::NAN };
        }
        let nf = n as f64;
        let mean = compensated_sum(xs.iter().copied()) / nf;
        let m2 = compensated_sum(xs.iter().map(|x| (x - mean).powi(2)));
        let m3 = compensated_sum(xs.iter().map(|x| (x - mean).powi(3)));
        let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4)));
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let pop = m2 / nf;
        let (skewness, excess_kurtosis) = if pop > 0.0 {
            ((m3 / nf) / pop.powf(1.5), (m4 / nf) / (pop * pop) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Self { count: n, mean, variance, std_error: (variance / nf).sqrt(), skewness, excess_kurtosis }
    }

    pub fn ci(&self) -> (f64, f64) {
        (self.mean - Z99 * self.std_error, self.mean + Z99 * self.std_error)
    }
}

fn bisect(mut lo: f64, mut hi: f64, increasing: impl Fn(f64) -> f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if increasing(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided Clopper–Pearson upper bound at `level` for `k` successes in `n`.
pub fn clopper_pearson_upper(k: u64, n: u64, level: f64) -> f64 {
    assert!(k <= n && n > 0);
    if k == n {
        return 1.0;
    }
    // Upper end p solves P(Bin(n, p) <= k) = 1 - level, i.e. I_p(k+1, n-k) = level.
    bisect(0.0, 1.0, |p| beta_reg((k + 1) as f64, (n - k) as f64, p), level)
}

/// One-sided Clopper–Pearson lower bound at `level`.
pub fn clopper_pearson_lower(k: u64, n: u64, level: f64) -> f64 {
    assert!(k <= n && n > 0);
    if k == 0 {
        return 0.0;
    }
    // Lower end p solves P(Bin(n, p) >= k) = 1 - level, i.e. I_p(k, n-k+1) = 1 - level.
    bisect(0.0, 1.0, |p| beta_reg(k as f64, (n - k + 1) as f64, p), 1.0 - level)
}

/// `ln mean exp(a_i)` and a normal-approximation upper confidence limit on
/// the same log scale, computed after shifting by `max a_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMeanExp {
    pub ln_mean: f64,
    pub ln_ci_lo: f64,
    pub ln_ci_hi: f64,
}

pub fn log_mean_exp(a: &[f64]) -> Option<LogMeanExp> {
    if a.is_empty() || a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let shift = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = a.iter().map(|v| (v - shift).exp()).collect();
    let m = Moments::of(&scaled);
    let (lo, hi) = m.ci();
    Some(LogMeanExp {
        ln_mean: shift + m.mean.ln(),
        ln_ci_lo: if lo > 0.0 { shift + lo.ln() } else { f64::NEG_INFINITY },
        ln_ci_hi: shift + hi.ln(),
    })
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = compensated_sum(x.iter().copied()) / n;
    let my = compensated_sum(y.iter().copied()) / n;
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = compensated_sum(x.iter().map(|a| (a - mx).powi(2)));
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_sample() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.skewness, 0.0);
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // Zero successes: upper = 1 - (1 - level)^{1/n}.
        let u = clopper_pearson_upper(0, 100, 0.99);
        assert!((u - (1.0 - 0.01f64.powf(0.01))).abs() < 1e-12);
        // All successes: lower = (1 - level)^{1/n}.
        let l = clopper_pearson_lower(100, 100, 0.99);
        assert!((l - 0.01f64.powf(0.01)).abs() < 1e-12);
        let (lo, hi) = (clopper_pearson_lower(30, 100, 0.99), clopper_pearson_upper(30, 100, 0.99));
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(clopper_pearson_upper(5, 5, 0.99), 1.0);
    }

    #[test]
    fn log_mean_exp_is_stable() {
        let r = log_mean_exp(&[1000.0, 1000.0]).unwrap();
        assert!((r.ln_mean - 1000.0).abs() < 1e-12);
        let r = log_mean_exp(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.ln_mean, 0.0);
        assert!(log_mean_exp(&[f64::INFINITY]).is_none());
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 0.25).collect();
        let (s, b) = linear_fit(&x, &y);
        assert!((s + 1.5).abs() < 1e-14 && (b - 0.25).abs() < 1e-14);
    }
}
