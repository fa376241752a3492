use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Domain,
    Resource,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin count mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} spins exceeds the full-table limit of {max}", max = crate::spinspace::MAX_SPINS)]
    TooManySpins(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::TooManySpins(_) | Error::Io(_) => ErrorKind::Resource,
            Error::Domain(_) | Error::NoSolution(_) => ErrorKind::Domain,
            Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Csv(_) => ErrorKind::Usage,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
