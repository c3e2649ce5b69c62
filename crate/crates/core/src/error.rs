use thiserror::Error;

use crate::tokens::TokenId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vocabulary must contain at least 2 tokens, got {0}")]
    VocabTooSmall(usize),
    #[error("token id {id} is outside the vocabulary (size {vocab_size})")]
    InvalidToken { id: TokenId, vocab_size: usize },
    #[error("token sequence must not be empty")]
    EmptySequence,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSample(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("scorer `{scorer}` does not support gradients")]
    NoGradient { scorer: String },
    #[error("scorer `{scorer}` failed on candidate {index:?}: {message}")]
    Scorer {
        scorer: String,
        index: Option<usize>,
        message: String,
    },
    #[error("bridge protocol error: {0}")]
    Protocol(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
