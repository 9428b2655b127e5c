use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid survival curve: {0}")]
    InvalidCurve(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero: survival probability is 0 at t={t}")]
    ZeroSurvival { t: usize },

    #[error("instance has no deadlines but a deadline operation was requested")]
    MissingDeadlines,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("LP reported infeasible (a well-formed model always admits x = 0; this indicates a construction bug)")]
    LpInfeasible,

    #[error("LP solver numerical issue: {0}")]
    LpNumericalIssue(String),

    #[error("state space limit exceeded: {states} states > limit {limit}")]
    StateSpaceLimit { states: usize, limit: usize },

    #[error("policy contract violation: {0}")]
    PolicyContract(String),

    #[error("missing binding: policy `{policy}` requires {binding}")]
    MissingBinding {
        policy: &'static str,
        binding: &'static str,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("csv parse error at row {row}: {msg}")]
    CsvRow { row: usize, msg: String },

    #[error("category `{0}` has no usable rows")]
    EmptyCategory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
