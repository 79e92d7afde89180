use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("graph is disconnected after {attempts} attempt(s); components: {components:?}")]
    Disconnected { attempts: usize, components: Vec<Vec<usize>> },

    #[error("n = {n} exceeds the brute-force limit of {limit}; {hint}")]
    SizeLimit { n: usize, limit: usize, hint: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("normalizer d = {d} leaves row {row} with diagonal {diagonal} < 1/2")]
    LazinessViolation { d: f64, row: usize, diagonal: f64 },

    #[error("stationary solve did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate distribution: entry {index} is not strictly positive")]
    DegenerateDistribution { index: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
