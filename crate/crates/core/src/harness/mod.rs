//! Seed-reproducible Monte Carlo experiments on the truncated variation.
//!
//! Replicates run in parallel, but each one is a pure function of its seed
//! and the per-replicate summaries are collected in index order before any
//! aggregation, so reports do not depend on the worker count.

mod config;
mod experiments;
mod report;
pub mod stats;

pub use config::{
    ExperimentConfig, ExperimentKind, DEFAULT_GUARD_RATIO, DEFAULT_LLN_TOLERANCE, DEFAULT_SLOPE_TOLERANCE,
    DEFAULT_VARIANCE_WINDOW,
};
pub use experiments::{
    resolve_threads, run_experiment, run_experiment_on_paths, run_replicates, PathSource, SEED_SCHEME, THREADS_ENV,
};
pub use report::{
    float, ExperimentReport, GridCheck, NamedMoments, ReplicateSummary, Row, RunInfo, Verdict, SCHEMA_VERSION,
};
