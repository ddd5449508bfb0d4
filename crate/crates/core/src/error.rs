//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors raised by the DSP, alignment, dataset, and model layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input signal is silent or too quiet to normalize (std <= 1e-8).
    NearSilent,
    /// A buffer was shorter than the operation's minimum length.
    BufferTooShort { needed: usize, got: usize },
    /// A sample rate, stretch rate, or frequency argument is out of range.
    InvalidArgument(String),
    /// Tensor or matrix dimensions do not line up.
    ShapeMismatch(String),
    /// An empty input where at least one element is required.
    EmptyInput(&'static str),
    /// A gradient or loss became NaN; training must stop loudly.
    NotFinite(&'static str),
    /// A serialized blob has a bad magic number or is truncated.
    CorruptData(String),
    /// A serialized blob has an unsupported format version.
    VersionMismatch { expected: u16, got: u16 },
    /// A checkpoint was produced by a different model configuration.
    ConfigMismatch { expected: u64, got: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NearSilent => write!(f, "signal is near-silent (std <= 1e-8)"),
            Error::BufferTooShort { needed, got } => {
                write!(f, "buffer too short: need {needed} samples, got {got}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::NotFinite(what) => write!(f, "non-finite value in {what}"),
            Error::CorruptData(msg) => write!(f, "corrupt data: {msg}"),
            Error::VersionMismatch { expected, got } => {
                write!(f, "format version mismatch: expected {expected}, got {got}")
            }
            Error::ConfigMismatch { expected, got } => {
                write!(
                    f,
                    "checkpoint config hash {got:#018x} does not match model {expected:#018x}"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
