use thiserror::Error;

/// Errors raised by state construction, validation and the correlation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("invalid subsystem index {index} for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("reduced state of the measured qubit is rank deficient (smallest eigenvalue {0:e})")]
    RankDeficient(f64),

    #[error("state rank {0} exceeds 2")]
    RankTooHigh(usize),

    #[error("decomposition does not reproduce the reduced state (residual {0:e})")]
    InconsistentDecomposition(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI: 3 for invariant violations, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
