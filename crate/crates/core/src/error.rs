use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{0} does not support incremental updates")]
    NotIncremental(&'static str),

    #[error("degenerate update denominator {value:e}{}", index.map(|i| format!(" at training index {i}")).unwrap_or_default())]
    DegenerateDenominator { index: Option<usize>, value: f64 },

    #[error("unsupported label alphabet: {0}")]
    UnsupportedLabels(String),

    #[error("invalid split t = {t} for n = {n}")]
    InvalidSplit { t: usize, n: usize },

    #[error("need at least {needed} training examples, found {found}")]
    TooFewExamples { needed: usize, found: usize },

    #[error("bootstrap sampling did not converge after {draws} draws")]
    BootstrapExhausted { draws: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
