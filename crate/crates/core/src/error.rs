use thiserror::Error;

/// Errors produced by the grid, solver and analysis modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("solution diverged at t = {t}: max|u| = {max_abs:e}")]
    Divergence { t: f64, max_abs: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inadmissible domain: A^2 = {a2} is not positive")]
    InadmissibleDomain { a2: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
