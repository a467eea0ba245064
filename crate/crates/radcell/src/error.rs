use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An adaptive integral ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: error estimate {achieved:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { tolerance: f64, achieved: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the caller's configuration or arguments.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Input(_) | Error::Unsupported(_) | Error::Parse(_) | Error::Io(_)
        )
    }
}
