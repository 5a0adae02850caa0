use thiserror::Error;

use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid utility specification: {0}")]
    InvalidSpec(String),

    #[error("{what} must be strictly positive (coordinate {index} is {value})")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("utility level {level} is not attainable for this family")]
    UnreachableLevel { level: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("rejection sampler gave up after {attempts} attempts: {context}")]
    RejectionCap { attempts: usize, context: String },

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures that originate in the stochastic samplers rather than in the inputs.
    pub fn is_sampling_failure(&self) -> bool {
        matches!(
            self,
            Error::RejectionCap { .. } | Error::Sampling(_) | Error::Lp(_)
        )
    }
}
