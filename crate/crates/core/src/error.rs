use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error(
        "truncation leakage: tail mass {tail_mass:.3e} exceeds tolerance {tail_tol:.3e}; \
         a Fock cutoff of at least {required_dim} is needed"
    )]
    TruncationLeakage {
        tail_mass: f64,
        tail_tol: f64,
        required_dim: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArguments(_) => "invalid-arguments",
            Error::PreconditionViolation(_) => "precondition-violation",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::TruncationLeakage { .. } => "truncation-leakage",
            Error::DegenerateInput(_) => "degenerate-input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
