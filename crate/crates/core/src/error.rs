use thiserror::Error;

/// Errors raised by the evaluators, the optimizer, and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {column} has norm {norm:e}, too small to normalize")]
    ZeroColumn { column: usize, norm: f64 },

    #[error("column {column} has norm {norm}, expected 1")]
    NotNormalized { column: usize, norm: f64 },

    #[error("matrix entry {index} is not finite")]
    NonFiniteEntry { index: usize },

    #[error("{n} users exceeds the enumeration limit of {max}")]
    TooManyUsers { n: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("noise standard deviation must be finite and positive, got {0}")]
    InvalidSigma(f64),

    #[error("sample budget {got} is below the minimum of {min}")]
    InvalidSamples { got: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not reach tolerance {tol:e} (error estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("tight-frame projection did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("fitness evaluated to a non-finite value ({value}) in generation {generation}")]
    NonFiniteFitness { generation: usize, value: f64 },

    #[error("unknown criterion `{0}` (expected capacity, ber, md, qd or ed)")]
    UnknownCriterion(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. } | Error::NonConvergence { .. } | Error::NonFiniteFitness { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
