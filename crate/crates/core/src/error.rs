use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An index or size argument outside the valid range.
    Usage(String),
    /// A model failed validation; the message lists the violations.
    Invalid(String),
    /// An exact computation would exceed its enumeration budget.
    Budget { what: &'static str, size: u128, limit: u128 },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Invalid(msg) => write!(f, "invalid model: {msg}"),
            Error::Budget { what, size, limit } => {
                write!(f, "{what} needs {size} entries, budget is {limit}")
            }
        }
    }
}

impl core::error::Error for Error {}
