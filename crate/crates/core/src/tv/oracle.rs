use super::{check_level, TvAlgorithm, TvResult};
use crate::error::{Error, Result};
use crate::path::SampledPath;

/// Point limit for the quadratic DP (`n <= 10^5` intervals).
pub const DP_MAX_POINTS: usize = 100_001;
/// Point limit for literal enumeration (`n <= 18` intervals).
pub const EXHAUSTIVE_MAX_POINTS: usize = 19;

#[inline]
fn gain(a: f64, b: f64, c: f64) -> f64 {
    ((b - a).abs() - c).max(0.0)
}

/// Definitional dynamic program: `best[j]` is the largest truncated sum over
/// subsequences ending at `j`. O(n^2) time.
pub fn tv_oracle_dp(path: &SampledPath, c: f64) -> Result<TvResult> {
    check_level(c)?;
    let x = path.values();
    if x.len() > DP_MAX_POINTS {
        return Err(Error::TooLarge { what: "tv_oracle_dp", len: x.len(), limit: DP_MAX_POINTS });
    }
    let mut best = vec![0.0f64; x.len()];
    let mut answer = 0.0f64;
    for j in 1..x.len() {
        let mut b = 0.0f64;
        for i in 0..j {
            b = b.max(best[i] + gain(x[i], x[j], c));
        }
        best[j] = b;
        answer = answer.max(b);
    }
    Ok(TvResult { c, value: answer, algorithm: TvAlgorithm::Dp })
}

/// Literal enumeration of every increasing index subsequence.
pub fn tv_oracle_exhaustive(path: &SampledPath, c: f64) -> Result<TvResult> {
    check_level(c)?;
    let x = path.values();
    let n = x.len();
    if n > EXHAUSTIVE_MAX_POINTS {
        return Err(Error::TooLarge {
            what: "tv_oracle_exhaustive",
            len: n,
            limit: EXHAUSTIVE_MAX_POINTS,
        });
    }
    let mut answer = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let mut prev: Option<usize> = None;
        let mut sum = 0.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                if let Some(p) = prev {
                    sum += gain(x[p], x[i], c);
                }
                prev = Some(i);
            }
        }
        answer = answer.max(sum);
    }
    Ok(TvResult { c, value: answer, algorithm: TvAlgorithm::Exhaustive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tv::total_variation;

    fn p(v: &[f64]) -> SampledPath {
        SampledPath::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_example_agrees() {
        let path = p(&[0.0, 2.0, 0.0, 2.0]);
        assert_eq!(tv_oracle_dp(&path, 1.0).unwrap().value, 3.0);
        assert_eq!(tv_oracle_exhaustive(&path, 1.0).unwrap().value, 3.0);
    }

    #[test]
    fn dp_at_zero_is_total_variation() {
        let path = p(&[0.3, -1.2, 0.5, 0.5, 2.0, -0.1]);
        let dp = tv_oracle_dp(&path, 0.0).unwrap().value;
        assert!((dp - total_variation(&path)).abs() < 1e-12);
    }

    #[test]
    fn level_above_oscillation_gives_zero() {
        let path = p(&[0.3, -1.2, 0.5, 2.0]);
        assert_eq!(tv_oracle_dp(&path, 3.2).unwrap().value, 0.0);
    }

    #[test]
    fn exhaustive_edge_cases() {
        assert_eq!(tv_oracle_exhaustive(&p(&[1.0]), 0.5).unwrap().value, 0.0);
        assert_eq!(tv_oracle_exhaustive(&p(&[0.0, 1.0]), 0.25).unwrap().value, 0.75);
        let long = p(&[0.0; 20]);
        assert!(matches!(tv_oracle_exhaustive(&long, 0.1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn dp_size_guard() {
        let long = SampledPath::from_values(vec![0.0; DP_MAX_POINTS + 1]).unwrap();
        let err = tv_oracle_dp(&long, 0.1).unwrap_err();
        assert!(err.to_string().contains("streaming"));
    }
}
