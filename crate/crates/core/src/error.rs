use thiserror::Error;

/// Errors produced anywhere in the bounding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable lists are incompatible: `{0}` is not shared")]
    VariableMismatch(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("no value assigned to variable `{0}`")]
    MissingAssignment(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown builtin problem `{0}`")]
    UnknownBuiltin(String),

    #[error("solver did not produce a usable solution: {0}")]
    Solver(String),

    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, state: Vec<f64>, message: String },

    #[error("{0}")]
    Numerical(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}
