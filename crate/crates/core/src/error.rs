use crate::bigraph::Side;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{side:?} vertex {id} out of range (part size {size})")]
    VertexOutOfRange { side: Side, id: usize, size: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("exact enumeration cap exceeded: {tuples} ordered tuples > cap {cap} (use the sampled mode)")]
    EnumerationCap { tuples: u128, cap: u128 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
