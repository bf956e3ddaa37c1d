use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A non-finite value crossed an operation boundary, or an inner
    /// iteration failed to converge.
    #[error("numerical error in {context}: offending value {value}")]
    Numerical { context: String, value: f64 },

    /// The model predicts no decrease, so the agreement ratio is undefined.
    #[error("degenerate model: predicted decrease {decrease} is below {threshold}")]
    DegenerateModel { decrease: f64, threshold: f64 },

    /// Caller violated an operation precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed input text; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numerical(context: impl Into<String>, value: f64) -> Self {
        Error::Numerical {
            context: context.into(),
            value,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dimension(expected: usize, got: usize) -> Self {
        Error::Usage(format!(
            "vector length {got} does not match dimension {expected}"
        ))
    }
}
