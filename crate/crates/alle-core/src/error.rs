//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, model fitting, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A file did not match the expected CSV schema.
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    /// A cell could not be parsed as a number.
    #[error("parse error in {path} at row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    /// A recording was labeled with a different state than requested.
    #[error("state mismatch: expected {expected}, file declares {found}")]
    StateMismatch { expected: String, found: String },

    /// Required (parameter, recording) pairs are missing or short.
    #[error("incomplete recordings: {0}")]
    Completeness(String),

    /// A stratified split left a stratum without train or test samples.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// A feature had zero variance and cannot be standardized.
    #[error("cannot standardize feature {feature}: zero variance on the training set")]
    Standardization { feature: String },

    /// The design matrix is rank deficient.
    #[error("singular design matrix; dependent column(s): {columns}")]
    Singularity { columns: String },

    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("did not converge after {iterations} iterations: {message}")]
    Convergence { iterations: usize, message: String },

    /// A bootstrap left a tree without out-of-bag samples.
    #[error("degenerate bootstrap: tree {tree} has an empty out-of-bag set; retrain with a new seed")]
    DegenerateBootstrap { tree: usize },

    /// Labels have zero variance, so R^2 is undefined.
    #[error("undefined variance: labels are all identical")]
    UndefinedVariance,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
