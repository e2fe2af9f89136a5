use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A data row was rejected; `row` is the 1-based line number in the file.
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },

    #[error("no numeric price column found")]
    NoNumericColumn,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("value {x} outside the distribution support")]
    OutsideSupport { x: f64 },

    #[error("level {alpha} below fitted tail (F(u) = {fu})")]
    LevelBelowTail { alpha: f64, fu: f64 },

    #[error("tail index xi = {xi} >= 1: tail mean is infinite")]
    InfiniteMean { xi: f64 },

    #[error("tail index xi = {xi} >= 1/2: squared-loss tail mean undefined")]
    SquaredTailUndefined { xi: f64 },

    #[error("tail model inconsistent with residuals: {0}")]
    InconsistentTail(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {best})")]
    NoConvergence { iterations: usize, best: f64 },

    #[error("quadrature failed to reach tolerance: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
