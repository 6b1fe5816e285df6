use thiserror::Error;

/// Errors raised by the forward and inverse solvers.
#[derive(Debug, Error)]
pub enum SlError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("search window: {0}")]
    SearchWindow(String),
    #[error("eigenvalues not simple: {0}")]
    Multiplicity(String),
    #[error("weight-number cross-check failed: {0}")]
    CrossCheck(String),
    #[error("lambda = {lambda} is within {distance:e} of an eigenvalue")]
    PoleProximity { lambda: f64, distance: f64 },
    #[error("Picard iteration diverged: residual {residual:e} after {iterations} steps")]
    Divergence { iterations: usize, residual: f64 },
    #[error("Picard iteration did not reach tol {tol:e} in {max_iter} steps (residual {residual:e})")]
    IterationBudget {
        max_iter: usize,
        tol: f64,
        residual: f64,
    },
    #[error("data collision: lambda_{n}0 = lambda_{k}1 = {lambda}")]
    DataCollision { n: usize, k: usize, lambda: f64 },
    #[error("main equation is singular at x = {x} (min pivot ratio {pivot:e})")]
    Solvability { x: f64, pivot: f64 },
    #[error("reconstruction cross-check discrepancy {0:e}")]
    ReconstructionInconsistency(f64),
    #[error("root matching failed: {0}")]
    Matching(String),
    #[error("data validation failed: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

impl SlError {
    /// Machine-readable error class, used by the CLI for exit codes.
    pub fn kind(&self) -> &'static str {
        match self {
            SlError::Io(_) | SlError::Parse(_) => "io",
            SlError::Validation(_) | SlError::Invalid(_) | SlError::DataCollision { .. } => {
                "validation"
            }
            SlError::Solvability { .. } => "solvability",
            _ => "numerical",
        }
    }
}

impl From<csv::Error> for SlError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => SlError::Io(std::io::Error::other(e.to_string())),
            _ => SlError::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for SlError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            SlError::Io(std::io::Error::other(e.to_string()))
        } else {
            SlError::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, SlError>;
