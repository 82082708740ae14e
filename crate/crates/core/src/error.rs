use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at grid index {index}")]
    NonFinite { index: usize },

    #[error("truncation level must be >= 0, got {0}")]
    NegativeLevel(f64),

    #[error("{what}: path has {len} points, limit is {limit}; use the streaming algorithm")]
    TooLarge {
        what: &'static str,
        len: usize,
        limit: usize,
    },

    #[error("truncation levels must be nonnegative and increasing (position {0})")]
    UnsortedLevels(usize),

    #[error("coefficient bound violated at grid index {index} (t = {t}, x = {x}): {detail}")]
    CoefficientBound {
        index: usize,
        t: f64,
        x: f64,
        detail: String,
    },

    #[error("circulant embedding has eigenvalue {min_eigenvalue:e} below tolerance and n = {n} exceeds the dense fallback limit")]
    Embedding { n: usize, min_eigenvalue: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("series did not converge: {0}")]
    Divergence(String),

    #[error("expression error at byte {pos}: {msg}")]
    Expr { pos: usize, msg: String },

    #[error("malformed path CSV (line {line}): {msg}")]
    Csv { line: usize, msg: String },

    #[error("malformed config: {0}")]
    Config(String),

    #[error("replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("MGF accumulation overflow: {0}")]
    Overflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
