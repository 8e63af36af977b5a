//! Crate-wide error type. Every variant names the stage that produced it so
//! a failure deep in the pipeline still reads as a useful diagnostic.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error with a source position.
    #[error("parser: {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    /// A syntactically valid program that violates a well-formedness rule.
    #[error("parser: {0}")]
    Validation(String),

    /// Problem-spec construction or name resolution failed.
    #[error("problem: {0}")]
    Problem(String),

    #[error("grounder: {0}")]
    Ground(String),

    #[error("bdd: {0}")]
    Bdd(String),

    #[error("symbolic: {0}")]
    Symbolic(String),

    #[error("optimizer: {0}")]
    Solver(String),

    #[error("oracle: {0}")]
    Oracle(String),

    /// A configured cap (grounding size, monomial count, timeout, ...) was hit.
    #[error("resource limit: {0}")]
    Resource(String),

    /// File I/O failure, naming the file involved.
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
