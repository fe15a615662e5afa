//! Crate-wide error type. Domain errors (exit code 1 in the CLI) are kept
//! distinct from I/O errors (exit code 2) so the front end can map them.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("scale matrix is not symmetric positive definite (Cholesky failed)")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sampling is not supported for the {0} family")]
    UnsupportedFamily(String),

    #[error(
        "order statistic W_[{index}] = {value} is not strictly positive; \
         use a smaller k or the Mahalanobis-norm statistic"
    )]
    NonPositiveOrderStatistic { index: usize, value: f64 },

    #[error("order statistic index {index} out of range 1..={n} (v_n = {v_n})")]
    OrderStatisticOutOfRange { index: i64, n: usize, v_n: f64 },

    #[error("degenerate conditional law: sigma_cond^2 = {0} is not positive")]
    DegenerateConditional(f64),

    #[error("existence violated: {0}")]
    Existence(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("singular covariance matrix; remove collinear or duplicated columns")]
    SingularCovariance,

    #[error("empty table")]
    EmptyTable,

    #[error("missing column(s): {0}")]
    MissingColumn(String),

    #[error("non-numeric cell(s) at data row(s) {rows:?} in column '{column}'")]
    NonNumericCell { column: String, rows: Vec<usize> },

    #[error("no closed-form oracle for family {0}; coverage and relative errors need Student")]
    NoOracle(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for filesystem/parse-level failures, false for domain errors.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::EmptyTable
                | Error::MissingColumn(_)
                | Error::NonNumericCell { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
