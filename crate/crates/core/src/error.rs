use thiserror::Error;

use crate::lm::Token;

/// Errors raised by models, the phrase pool and the generation loops.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("token {token} is outside the vocabulary (size {vocab_size})")]
    TokenOutOfVocab { token: Token, vocab_size: usize },

    #[error("context must contain at least one token")]
    EmptyContext,

    #[error("corpus of {len} tokens is too short for an order-{order} model")]
    CorpusTooShort { len: usize, order: usize },

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("phrase length {len} outside [2, {max}]")]
    PhraseLength { len: usize, max: usize },

    #[error("phrase starts with {found}, expected {expected}")]
    PhraseKey { expected: Token, found: Token },

    #[error("pool file line {line}: {message}")]
    PoolParse { line: usize, message: String },

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("cost model denominator is zero")]
    ZeroCost,

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
