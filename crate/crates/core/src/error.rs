use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid discriminant {0}: must be a fundamental discriminant other than 1")]
    InvalidDiscriminant(i64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluation did not converge: {0}")]
    NoConvergence(String),
    #[error("zero count audit failed for {component}: found {found}, expected {expected:.2}")]
    MissedZeros {
        component: String,
        found: usize,
        expected: f64,
    },
    #[error("tail bound {bound:.3e} exceeds requested tolerance {tol:.3e}")]
    TailTooLarge { bound: f64, tol: f64 },
    #[error("zero cache: {0}")]
    Cache(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
