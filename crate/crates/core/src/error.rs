//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::MonthStamp;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("invalid range: lo = {lo} must be below hi = {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    EmptyInput,

    // dataset
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("unexpected column `{0}`")]
    UnexpectedColumn(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid month stamp `{0}` (expected YYYY-MM)")]
    InvalidDate(String),

    #[error("dates not increasing at data row {row}")]
    NonMonotonicDates { row: usize },

    #[error("gap in dates at data row {row}: expected {expected}, found {found}")]
    GapInDates {
        row: usize,
        expected: MonthStamp,
        found: MonthStamp,
    },

    #[error("unparseable cell at data row {row}, field {col}: `{text}`")]
    UnparseableCell {
        row: usize,
        col: usize,
        text: String,
    },

    #[error("missing value at data row {row}, field {col}")]
    MissingValue { row: usize, col: usize },

    #[error("split point {0} leaves fewer than two rows on one side")]
    SplitOutOfRange(MonthStamp),

    #[error("column {0} is constant")]
    ConstantColumn(usize),

    #[error("unknown column index {0}")]
    UnknownColumn(usize),

    // ffnet
    #[error("training diverged to a non-finite value at epoch {epoch}")]
    DivergedToNonFinite { epoch: usize },

    // ridge
    #[error("normal equations are singular")]
    SingularSystem,

    // arima
    #[error("series too short: need more than {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("need at least {needed} anchor values, got {got}")]
    InsufficientAnchor { needed: usize, got: usize },

    #[error("series is constant")]
    ConstantSeries,

    #[error("Durbin-Levinson recursion broke down at lag {lag}")]
    NumericalBreakdown { lag: usize },

    #[error("optimizer found no finite objective value")]
    OptimizerFailed,

    // evalkit
    #[error("actual values are constant")]
    ConstantActuals,

    #[error("degenerate degrees of freedom: n = {n}, k = {k}")]
    DegenerateDof { n: usize, k: usize },

    #[error("in-sample R-squared is zero")]
    ZeroInSampleR2,

    #[error("loss differential is degenerate (identical forecasts or zero variance)")]
    DegenerateLossDifferential,

    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    // harness
    #[error("every grid cell failed")]
    AllCellsFailed,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
