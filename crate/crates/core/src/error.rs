use alloc::string::String;

/// Failure modes of the numerical layer and the power engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("could not bracket {0}")]
    Bracket(String),
    #[error("invalid test specification: {0}")]
    InvalidSpec(String),
    #[error("sample size {n} is below the minimum of {min} for this test")]
    BelowMinimum { n: u64, min: u64 },
    #[error("target power is unreachable: {0}")]
    Unreachable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
