use thiserror::Error;

/// Errors produced by the collapse library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("arity error: variable `{var}` exceeds memory depth {depth}")]
    Arity { var: String, depth: usize },

    #[error("capacity error: memory depth {0} exceeds the maximum of {max}", max = crate::pfn::MAX_MEMORY_DEPTH)]
    Capacity(usize),

    #[error("history error: need {needed} previous records, have {available}")]
    History { needed: usize, available: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("truth table error: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;
