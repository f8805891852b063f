use thiserror::Error;

/// Errors reported by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter outside the family domain: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("jacobian rank deficient (smallest singular value {0:e})")]
    RankDeficient(f64),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("estimate on the parameter boundary: {0}")]
    Boundary(String),
    #[error("line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
