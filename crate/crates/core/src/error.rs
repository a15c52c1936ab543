use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("function is not strictly positive (min grid value {min:e})")]
    NonPositive { min: f64 },

    #[error("dimension mismatch: expected S^{expected}, got S^{got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations (last change {last:e})")]
    NoConvergence { what: &'static str, iterations: usize, last: f64 },

    #[error("Picard iteration did not reach tolerance after {iterations} iterations (residual {residual:e})")]
    PicardNonConvergence { iterations: usize, residual: f64 },

    #[error("source term violates the decay hypothesis: tail exponent {exponent:.4}, required at most {required:.4}")]
    DecayViolation { exponent: f64, required: f64 },

    #[error("growth hypothesis violated: fitted tail exponent {exponent:.4}, expected {expected:.4}")]
    GrowthViolation { exponent: f64, expected: f64 },

    #[error("alpha = 1 is excluded here; use the log-Sobolev functional instead")]
    AlphaIsOne,
}

pub type Result<T> = std::result::Result<T, Error>;
