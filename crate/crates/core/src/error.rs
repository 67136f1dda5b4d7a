use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty reduction")]
    EmptyReduction,

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid channel: {}", .0.join("; "))]
    InvalidChannel(Vec<String>),

    #[error("alphabet too large: |X|={inputs}, |Y|={outputs}, cap is {cap}")]
    AlphabetTooLarge {
        inputs: usize,
        outputs: usize,
        cap: usize,
    },

    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
