use std::fmt;

/// Errors surfaced by the library.
#[derive(Debug)]
pub enum Error {
    /// An operation that needs at least one element got none.
    EmptyInput,
    /// A run profile violated its basic shape (empty, or a zero length).
    InvalidProfile(String),
    /// A merge case was applied although its guard does not hold.
    IllegalMerge,
    /// Requested profile parameters cannot be met (e.g. `n < 2*rho - 1`).
    Infeasible(String),
    /// The profile has an interior run of length 1; no array decomposes
    /// into such runs.
    Unrealizable,
    /// A numeric argument fell outside the operation's domain.
    OutOfDomain(String),
    /// Slice bounds passed to a merge were not `lo <= mid <= hi <= len`.
    MalformedBounds,
    /// Malformed textual input (profiles, integers, trace lines).
    Parse(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "empty input"),
            Error::InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            Error::IllegalMerge => write!(f, "illegal merge"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::Unrealizable => write!(f, "unrealizable profile"),
            Error::OutOfDomain(msg) => write!(f, "out of domain: {msg}"),
            Error::MalformedBounds => write!(f, "malformed bounds"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
