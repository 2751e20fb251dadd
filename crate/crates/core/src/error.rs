use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("incompatible Neumann data: defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    Compatibility { defect: f64, tolerance: f64 },

    #[error("iteration did not converge after {iterations} steps (last residual {last:.3e})")]
    NonConvergence { iterations: usize, last: f64, history: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("kernel evaluated at a singular point: {0}")]
    Singularity(String),

    #[error("quadrature accuracy error: {0}")]
    Accuracy(String),

    #[error("fixed-point iteration diverged (contraction factor {factor:.3})")]
    Divergence { factor: f64, history: Vec<f64> },

    #[error("invading run stopped after {completed} of {scheduled} solves: {cause}")]
    PartialRun { completed: usize, scheduled: usize, cause: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
