use thiserror::Error;

/// Errors raised by the completion toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands disagree on dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input data that cannot be used (empty mask, empty evaluation set, non-finite values).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration or generator parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numeric routine failed outside of a solver loop.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A solver produced non-finite values.
    #[error("solver diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    /// Malformed TNS1/MSK1 payload.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
