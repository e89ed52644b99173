use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("capacity exceeded: total dimension {requested} is above the limit of {limit}")]
    Capacity { requested: u128, limit: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invalid state: {0}")]
    Invariant(String),

    #[error("locality violation: {0}")]
    Locality(String),

    #[error("no trials recorded for setting pair (alice={alice}, bob={bob})")]
    EmptyCell { alice: u8, bob: u8 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
