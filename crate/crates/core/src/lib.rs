//! Truncated variation of sampled stochastic paths.
//!
//! - [`pathsim`]: fractional Brownian motion, diffusion and Lévy path generators
//!   on uniform grids, deterministic in their seed.
//! - [`tv`]: exact truncated variation (linear-time lazy tube tracker plus
//!   definitional oracles), the minimal envelope and the level-crossing skeleton.
//! - [`bounds`]: the Orlicz/chaining constant pipeline, tail and MGF bounds and
//!   the exponential-moment criterion for Lévy measures.
//! - [`harness`]: declarative, seed-reproducible Monte Carlo experiments.

// `!(x > 0.0)` is the NaN-rejecting form used for parameter checks throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod expr;
pub mod harness;
pub mod path;
pub mod pathsim;
pub mod quad;
pub mod rng;
pub mod sum;
pub mod tv;

pub use error::{Error, Result};
pub use path::{Interpretation, SampledPath};
pub use tv::{
    levy_skeleton, minimal_envelope, total_variation, truncated_variation, tv_oracle_dp,
    tv_oracle_exhaustive, tv_profile, Skeleton, TvAlgorithm, TvResult,
};

/// Crate version recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
