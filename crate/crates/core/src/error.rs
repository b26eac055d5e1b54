use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },

    #[error("filter has {taps} taps but declared context length {context_length}")]
    FilterTooLong { taps: usize, context_length: usize },

    #[error("filter context length must be positive")]
    EmptyContext,

    #[error("unknown engine kind `{0}` (expected naive, epoched or continuous)")]
    UnknownEngine(String),

    #[error("generation length {requested} exceeds filter context length {context_length}")]
    HorizonTooLong { requested: usize, context_length: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("symmetric eigensolver did not converge for L = {0}")]
    EigenNoConvergence(usize),

    #[error("L = {len} exceeds the dense eigensolve cap of {cap}")]
    EigenCapExceeded { len: usize, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
