//! Truncated variation of sampled paths.
//!
//! For a sampled path `x_0, ..., x_n` and a level `c >= 0` the truncated
//! variation is the supremum, over increasing index subsequences, of
//! `sum (|x_{i_k} - x_{i_{k-1}}| - c)_+`. The primary algorithm is a lazy
//! tube tracker: an output value `y` is kept within `c/2` of the path and
//! moved only when forced, and the total distance it travels is the answer.
//! The start is deferred while the intersection of all tubes seen so far is
//! nonempty, which leaves the initial value free.
//!
//! The quadratic DP and the exhaustive enumeration in [`oracle`] are the
//! definitional checks that the tube tracker is tested against.

mod oracle;
mod skeleton;

pub use oracle::{tv_oracle_dp, tv_oracle_exhaustive, DP_MAX_POINTS, EXHAUSTIVE_MAX_POINTS};
pub use skeleton::{levy_skeleton, Overshoot, Skeleton};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::path::{Interpretation, SampledPath};
use crate::sum::{compensated_sum, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvAlgorithm {
    Streaming,
    Dp,
    Exhaustive,
}

impl TvAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Streaming => "streaming",
            Self::Dp => "dp",
            Self::Exhaustive => "exhaustive",
        }
    }
}

impl std::str::FromStr for TvAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "streaming" => Ok(Self::Streaming),
            "dp" => Ok(Self::Dp),
            "exhaustive" => Ok(Self::Exhaustive),
            other => Err(invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvResult {
    pub c: f64,
    pub value: f64,
    pub algorithm: TvAlgorithm,
}

pub(crate) fn check_level(c: f64) -> Result<()> {
    if c.is_nan() {
        return Err(invalid("truncation level is NaN"));
    }
    if c < 0.0 {
        return Err(Error::NegativeLevel(c));
    }
    Ok(())
}

enum TubeState {
    /// Start deferred; `[lo, hi]` is the intersection of all tubes so far.
    Pending { lo: f64, hi: f64 },
    Tracking { y: f64 },
}

/// Outcome of feeding one grid value to the tracker.
enum TubeStep {
    Deferred,
    /// The pending band emptied: the output starts at `anchor` (a point of
    /// every earlier tube) and moves to `y`.
    Started { anchor: f64, y: f64 },
    Tracked { y: f64 },
}

struct LazyTube {
    half: f64,
    state: TubeState,
    travelled: CompensatedSum,
}

impl LazyTube {
    fn new(x0: f64, c: f64) -> Self {
        let half = 0.5 * c;
        Self {
            half,
            state: TubeState::Pending { lo: x0 - half, hi: x0 + half },
            travelled: CompensatedSum::new(),
        }
    }

    #[inline]
    fn push(&mut self, x: f64) -> TubeStep {
        let (a, b) = (x - self.half, x + self.half);
        match self.state {
            TubeState::Pending { lo, hi } => {
                let (nlo, nhi) = (lo.max(a), hi.min(b));
                if nlo <= nhi {
                    self.state = TubeState::Pending { lo: nlo, hi: nhi };
                    return TubeStep::Deferred;
                }
                // Disjoint: the new tube lies entirely above or below the band.
                let (anchor, y) = if a > hi { (hi, a) } else { (lo, b) };
                self.travelled.add((y - anchor).abs());
                self.state = TubeState::Tracking { y };
                TubeStep::Started { anchor, y }
            }
            TubeState::Tracking { y } => {
                let ny = y.clamp(a, b);
                if ny != y {
                    self.travelled.add((ny - y).abs());
                    self.state = TubeState::Tracking { y: ny };
                }
                TubeStep::Tracked { y: ny }
            }
        }
    }

    fn total(&self) -> f64 {
        self.travelled.value()
    }
}

fn streaming_value(values: &[f64], c: f64) -> f64 {
    let mut tube = LazyTube::new(values[0], c);
    for &x in &values[1..] {
        tube.push(x);
    }
    tube.total()
}

/// Truncated variation at level `c`, in O(n) time and O(1) extra space.
///
/// The value is the supremum over grid subsequences. For a cadlag-step path
/// this is the exact functional of the step function; for a piecewise-linear
/// path it is exact for the interpolant and a lower bound for any continuous
/// path through the same grid values.
pub fn truncated_variation(path: &SampledPath, c: f64) -> Result<TvResult> {
    check_level(c)?;
    Ok(TvResult {
        c,
        value: streaming_value(path.values(), c),
        algorithm: TvAlgorithm::Streaming,
    })
}

/// Sum of absolute consecutive increments (the level-zero truncated variation).
pub fn total_variation(path: &SampledPath) -> f64 {
    compensated_sum(path.values().windows(2).map(|w| (w[1] - w[0]).abs()))
}

/// The lazy-tube trajectory: a path within `c/2` of `path` at every grid
/// point whose total variation equals the truncated variation of `path`.
///
/// Grid points before the tracker starts carry the constant start value.
pub fn minimal_envelope(path: &SampledPath, c: f64) -> Result<SampledPath> {
    check_level(c)?;
    let values = path.values();
    let mut out = vec![0.0; values.len()];
    let mut tube = LazyTube::new(values[0], c);
    let mut pending_until = None;
    for (k, &x) in values.iter().enumerate().skip(1) {
        match tube.push(x) {
            TubeStep::Deferred => {}
            TubeStep::Started { anchor, y } => {
                out[..k].fill(anchor);
                out[k] = y;
                pending_until = Some(k);
            }
            TubeStep::Tracked { y } => out[k] = y,
        }
    }
    if pending_until.is_none() {
        // Never forced to move: any point of the common band works; take its middle.
        let mid = match tube.state {
            TubeState::Pending { lo, hi } => 0.5 * (lo + hi),
            TubeState::Tracking { y } => y,
        };
        out.fill(mid);
    }
    SampledPath::new(path.t0(), path.dt(), out, Interpretation::PiecewiseLinear)
}

/// Truncated variation at each of the nondecreasing levels in `levels`.
pub fn tv_profile(path: &SampledPath, levels: &[f64]) -> Result<Vec<f64>> {
    for (i, &c) in levels.iter().enumerate() {
        if c.is_nan() || c < 0.0 || (i > 0 && c < levels[i - 1]) {
            return Err(Error::UnsortedLevels(i));
        }
    }
    Ok(levels.iter().map(|&c| streaming_value(path.values(), c)).collect())
}

/// Largest grid-point distance between two paths of equal length.
pub fn sup_distance(a: &SampledPath, b: &SampledPath) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> SampledPath {
        SampledPath::from_values(v.to_vec()).unwrap()
    }

    fn tv(v: &[f64], c: f64) -> f64 {
        truncated_variation(&p(v), c).unwrap().value
    }

    #[test]
    fn constant_path_has_zero_variation() {
        for c in [0.0, 0.1, 5.0] {
            assert_eq!(tv(&[1.5; 7], c), 0.0);
        }
    }

    #[test]
    fn monotone_path_uses_end_to_end_increment() {
        assert!((tv(&[0.0, 0.4, 1.0], 0.3) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn alternating_path() {
        assert_eq!(tv(&[0.0, 2.0, 0.0, 2.0], 1.0), 3.0);
    }

    #[test]
    fn single_point_and_level_zero() {
        assert_eq!(tv(&[3.0], 0.7), 0.0);
        assert_eq!(tv(&[0.0, 2.0, 0.0, 2.0], 0.0), 6.0);
        assert_eq!(total_variation(&p(&[0.0, 2.0, 0.0, 2.0])), 6.0);
        assert_eq!(total_variation(&p(&[4.0; 3])), 0.0);
    }

    #[test]
    fn rejects_bad_levels() {
        let path = p(&[0.0, 1.0]);
        assert!(matches!(truncated_variation(&path, -0.1), Err(Error::NegativeLevel(_))));
        assert!(truncated_variation(&path, f64::NAN).is_err());
        assert_eq!(truncated_variation(&path, f64::INFINITY).unwrap().value, 0.0);
    }

    #[test]
    fn envelope_of_small_oscillation_is_constant() {
        let env = minimal_envelope(&p(&[0.0, 0.6]), 1.0).unwrap();
        assert_eq!(env.values(), &[0.3, 0.3]);
        assert_eq!(total_variation(&env), 0.0);
    }

    #[test]
    fn envelope_of_monotone_path() {
        let path = p(&[0.0, 0.4, 1.0]);
        let env = minimal_envelope(&path, 0.3).unwrap();
        assert!((total_variation(&env) - 0.7).abs() < 1e-15);
        assert!(sup_distance(&env, &path) <= 0.15 + 1e-15);
    }

    #[test]
    fn profile_checks_order() {
        let path = p(&[0.0, 2.0, 0.0, 2.0]);
        assert_eq!(tv_profile(&path, &[0.0, 1.0, 2.0]).unwrap(), vec![6.0, 3.0, 0.0]);
        assert!(matches!(tv_profile(&path, &[0.5, 0.2]), Err(Error::UnsortedLevels(1))));
        assert!(matches!(tv_profile(&path, &[-0.5]), Err(Error::UnsortedLevels(0))));
    }
}
