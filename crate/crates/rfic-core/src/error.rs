use core::fmt;

/// Errors for chain, disorder and coarse-graining computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An input slice or grid was empty.
    Empty(&'static str),
    /// Two samples or grids that must have equal length do not.
    LengthMismatch { left: usize, right: usize },
    /// A parameter is outside its admissible range.
    InvalidParameter {
        field: &'static str,
        message: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Empty(what) => write!(f, "empty input: {what}"),
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::InvalidParameter { field, message } => {
                write!(f, "invalid parameter `{field}`: {message}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
