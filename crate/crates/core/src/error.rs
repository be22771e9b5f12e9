use std::fmt;

/// Errors raised by the fluence, estimation and I/O layers.
///
/// The variants fall into three families that the command-line front end maps
/// onto its exit codes: configuration problems, malformed or unreadable files,
/// and numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singularity: {0}")]
    Singular(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("empty support: threshold {tau:.6e} rejects every pixel; try tau <= {suggested:.6e}")]
    EmptySupport { tau: f64, suggested: f64 },
    #[error("no control frame in tensor; supply an explicit per-fiber bias vector")]
    MissingControlFrame,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse error class, used to select process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::MissingControlFrame => ErrorClass::Config,
            Error::Format(_) | Error::Io(_) => ErrorClass::Io,
            Error::Domain(_) | Error::Singular(_) | Error::Numeric(_) | Error::EmptySupport { .. } => {
                ErrorClass::Numeric
            }
        }
    }

    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }

    pub(crate) fn format(msg: impl fmt::Display) -> Self {
        Error::Format(msg.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
