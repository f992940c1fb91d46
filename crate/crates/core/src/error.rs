use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantum state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("settings must be on opposite sides")]
    SideMismatch,
    #[error("conditioning event has zero probability")]
    ZeroProbability,
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("unrecognized state shape: {0}")]
    UnrecognizedState(String),
    #[error("nnls did not converge within {iterations} iterations (residual {residual:.3e})")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        partial: Vec<f64>,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
