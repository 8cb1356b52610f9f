use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("{what} failed to converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("normalization error: {0}")]
    Normalization(String),
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("singular argument: {0}")]
    Singular(String),
    #[error("ill-defined degree: minimum modulus {min_modulus:e} below {floor:e}")]
    IllDefinedDegree { min_modulus: f64, floor: f64 },
    #[error("profile not admissible: {0}")]
    Inadmissible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
