use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value handed to the library violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An equilibrium solver could not produce a certified answer.
    #[error("equilibrium solver failed: {0}")]
    Solver(String),

    /// A linear solve or fixed-point iteration missed its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Experiment configuration rejected; `field` is a dotted path into the document.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
