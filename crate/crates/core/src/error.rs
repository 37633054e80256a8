use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: waveforms, registers, sequence files.
    #[error("validation error: {0}")]
    Validation(String),

    /// Inconsistent run parameters (e.g. `dt` not dividing the duration).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("Krylov propagation did not converge at {location} (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence {
        location: String,
        residual: f64,
        iterations: usize,
    },

    #[error("memory estimate {required} bytes exceeds budget {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },

    #[error("refusing {what}: {reason}")]
    Refused { what: String, reason: String },

    #[error("wall-clock limit exceeded after {elapsed_s:.1} s")]
    TimedOut { elapsed_s: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Config(_) | Error::Dimension { .. } | Error::Json(_) => 2,
            Error::NonConvergence { .. } | Error::TimedOut { .. } => 3,
            Error::MemoryBudget { .. } | Error::Refused { .. } => 4,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
