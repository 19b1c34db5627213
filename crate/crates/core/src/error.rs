use thiserror::Error;

/// Errors raised by the solvers and diagnostics.
#[derive(Debug, Error)]
pub enum HartreeError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no bound state resolved (lowest eigenvalue {eigenvalue:.3e} >= 0); enlarge the domain")]
    NoBoundState { eigenvalue: f64 },

    #[error("SCF did not converge after {iterations} iterations (last residual {:.3e})", .history.last().copied().unwrap_or(f64::NAN))]
    NotConverged { iterations: usize, history: Vec<f64> },

    #[error("eigensolver did not converge in the {sector} sector (residual {residual:.3e})")]
    EigenNotConverged { sector: String, residual: f64 },

    #[error("linear solve did not converge (relative residual {residual:.3e})")]
    LinearSolve { residual: f64 },

    #[error("fit unavailable: {0}")]
    FitUnavailable(String),

    #[error("quadrature did not converge at r = {radius}")]
    Quadrature { radius: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HartreeError>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(HartreeError::Config(msg.into()))
}
