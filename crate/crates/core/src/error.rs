use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to deliver its accuracy contract.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A matrix or kernel failed a structural validity check.
    #[error("construction error: {0}")]
    Construction(String),

    /// A chain produced a non-finite coordinate.
    #[error("chain diverged: coordinate {coord} non-finite at sweep {sweep}")]
    Divergence { coord: usize, sweep: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
