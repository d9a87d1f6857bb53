use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("feature index {index} out of range for a matrix with {num_features} columns")]
    FeatureOutOfRange { index: usize, num_features: usize },

    #[error("parameter k={k} out of range for {operator} with {children} children")]
    ParameterOutOfRange {
        operator: String,
        k: usize,
        children: usize,
    },

    #[error("operator {operator} needs at least two arguments, got {children}")]
    TooFewChildren { operator: String, children: usize },

    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("row count mismatch: matrix has {rows} rows, labels have {labels}")]
    LengthMismatch { rows: usize, labels: usize },

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration needs {needed} evaluations, above the cap of {cap}; subsample rows or lower max_num_literals")]
    EnumerationCap { needed: u128, cap: u128 },

    #[error("solver produced no feasible solution: {0}")]
    NoFeasibleSolution(String),

    #[error("lp format error at line {line}: {message}")]
    LpFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
