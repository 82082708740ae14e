//! Level-crossing skeleton: stop whenever the path has moved more than
//! `c/2` away from the value recorded at the previous stop, and hold that
//! value in between.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::path::{Interpretation, SampledPath};

/// Largest amount by which a recorded skeleton jump exceeds `c/2`.
///
/// In continuous time a continuous path is caught exactly at distance `c/2`;
/// on a grid the first index past the threshold overshoots it. Under the
/// piecewise-linear reading this overshoot is also how far the path strays
/// beyond `c/2` from the skeleton just before the stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overshoot {
    pub index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct Skeleton {
    /// Stop indices, starting with index 0 for the initial time.
    pub stop_indices: Vec<usize>,
    pub skel: SampledPath,
    /// Worst jump overshoot, if any stop happened.
    pub max_overshoot: Option<Overshoot>,
    /// Number of stops whose jump exceeded `c/2` by more than rounding.
    pub overshoot_events: usize,
}

impl Skeleton {
    /// Whether the `c/2` approximation bound fails for the path read in
    /// continuous time. Cadlag-step paths are caught exactly at grid times.
    pub fn violation(&self, interpretation: Interpretation) -> Option<Overshoot> {
        match interpretation {
            Interpretation::CadlagStep => None,
            Interpretation::PiecewiseLinear => self.max_overshoot.filter(|o| o.magnitude > 0.0),
        }
    }
}

pub fn levy_skeleton(path: &SampledPath, c: f64) -> Result<Skeleton> {
    if !(c > 0.0) {
        return Err(invalid(format!("skeleton level must be > 0, got {c}")));
    }
    let half = 0.5 * c;
    let x = path.values();
    let mut stops = vec![0usize];
    let mut out = Vec::with_capacity(x.len());
    let mut held = x[0];
    let mut worst: Option<Overshoot> = None;
    let mut events = 0;
    out.push(held);
    for (j, &v) in x.iter().enumerate().skip(1) {
        let dev = (v - held).abs();
        if dev > half {
            let magnitude = dev - half;
            if magnitude > 1e-12 * (half + dev) {
                events += 1;
            }
            if worst.is_none_or(|w| magnitude > w.magnitude) {
                worst = Some(Overshoot { index: j, magnitude });
            }
            stops.push(j);
            held = v;
        }
        out.push(held);
    }
    Ok(Skeleton {
        stop_indices: stops,
        skel: SampledPath::new(path.t0(), path.dt(), out, Interpretation::CadlagStep)?,
        max_overshoot: worst,
        overshoot_events: events,
    })
}
