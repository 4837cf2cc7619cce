use thiserror::Error;

/// Errors produced by the key-rate computations and their front ends.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The effective transmission ηT vanished where it appears in a denominator.
    #[error("singular channel: {0}")]
    Singularity(String),

    /// A constructed covariance matrix violated the uncertainty principle.
    #[error("invalid covariance matrix: symplectic eigenvalue {eigenvalue} < 1")]
    InvalidCovariance { eigenvalue: f64 },

    /// Estimation input carries no information (e.g. all-zero modulation).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A configuration key is missing or carries an unusable value.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
