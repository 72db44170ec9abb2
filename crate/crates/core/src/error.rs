use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An instance is larger than an exact routine is configured to handle.
    #[error("{what}: size {size} exceeds the configured cap of {cap}")]
    Capacity {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    /// Feedback contradicts what the solver already knows. Honest oracles never trigger this.
    #[error("inconsistent feedback: {0}")]
    Inconsistent(String),

    /// The oracle answered outside its contract (e.g. a clause index out of range).
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
