//! Explicit constants and bounds for the truncated variation of Gaussian,
//! diffusion and Lévy paths.
//!
//! The chain of constants runs
//! `OrliczSpec -> ChainConstants -> CorollaryConstants -> bound`. Every stage
//! is an exact formula except the two series behind `M3` and `M5`, which are
//! summed until geometrically dominated, and the numeric Orlicz scale of the
//! tail-only sub-Gaussian case.

mod chain;
mod levy_moment;
mod mgf;
mod orlicz;
mod scale;

pub use chain::{
    chaining_constants, corollary_constants, m3_partial, m3_series, m5_partial, m5_series, net_constants,
    net_partial_sum, optimized_pipeline, pipeline_at, ChainConstants, CorollaryConstants, NetConstants, Pipeline,
    SeriesSum, R_GRID,
};
pub use levy_moment::{levy_exp_moment_check, ExpMomentCheck};
pub use mgf::{
    bm_mgf_bound, diffusion_mgf_bound, diffusion_mgf_bound_with, fbm_constants, fbm_tail_bound, mgf_coefficients,
    DiffusionBoundParams, DiffusionDerived, FbmConstants, MgfBound, MgfCoefficients, TailBound,
};
pub use orlicz::{convexity_onset, ln_phi, orlicz_spec, phi, phi_inverse, sublinearity_slack, OrliczSpec};
pub use scale::{orlicz_moment, orlicz_scale_numeric, subgaussian_orlicz_scale, TailModel};
