use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e} below tolerance {tolerance:e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("unsupported dimension {0}: Sylvester construction needs a power of two")]
    UnsupportedDimension(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("covariance is singular: {0}")]
    SingularCovariance(String),

    #[error("degenerate operand: {0}")]
    DegenerateOperand(String),

    #[error("config error at key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("trial {trial} failed at k={k}, n_ps={n_ps}: {source}")]
    Trial {
        trial: usize,
        k: usize,
        n_ps: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
