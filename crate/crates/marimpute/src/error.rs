use thiserror::Error;

/// Errors produced by the imputation engine and its checkers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),
    #[error("mechanism `{0}` has no analytic density")]
    NoDensity(String),
    #[error("mechanism `{0}` has no conditional oracle for column {1}")]
    NoOracle(String, usize),
    #[error("unsupported condition {condition} for mechanism `{spec}`: {reason}")]
    UnsupportedCheck {
        spec: String,
        condition: String,
        reason: String,
    },
    #[error("pattern {1} of mechanism `{0}` has zero marginal mass on the grid")]
    ZeroPatternMass(String, usize),
    #[error("conditioning point {0:?} is outside the observed-pattern support")]
    OutsideSupport(Vec<f64>),
    #[error("column {0} has no observed entries")]
    EmptyColumn(usize),
    #[error("column {0} has fewer than {1} observed entries")]
    TooFewObserved(usize, usize),
    #[error("no missing cells")]
    NoMissingCells,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("data error at line {line}: {msg}")]
    DataError { line: usize, msg: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
