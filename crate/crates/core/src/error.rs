use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular design: {0}")]
    Singular(String),

    #[error("optimisation diverged at iteration {iteration} (loss trace prefix: {trace_prefix:?})")]
    Diverged {
        iteration: usize,
        trace_prefix: Vec<f64>,
    },

    #[error("degenerate correlation between columns {j} and {k} (|r| = {r})")]
    DegenerateCorrelation { j: usize, k: usize, r: f64 },

    #[error("column {column} has zero variance")]
    DegenerateColumn { column: usize },

    #[error("at least 2 environments are required, got {0}")]
    InsufficientEnvironments(usize),

    #[error("dataset carries no ground truth")]
    MissingGroundTruth,

    #[error("biased selection starved: {accepted} accepted out of {drawn} candidates")]
    SelectionStarved { accepted: usize, drawn: usize },

    #[error("column {column}: {message}")]
    Column { column: String, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
