use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {estimate:.3e} > tolerance {tolerance:.3e} after {intervals} subintervals")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
        intervals: usize,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("infeasible exponent selection: {0} is violated")]
    Infeasible(crate::initdata::Constraint),

    #[error("grid does not resolve the construction: {0}")]
    Resolution(String),

    #[error("linear solver breakdown at row {row}")]
    SolverBreakdown { row: usize },

    #[error("scheme violation at t = {t}: {reason}")]
    SchemeViolation { t: f64, reason: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("trajectory too short: {found} snapshots, need at least {needed}")]
    TooFewSnapshots { found: usize, needed: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
