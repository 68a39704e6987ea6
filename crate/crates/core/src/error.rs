use thiserror::Error;

/// Errors raised by curve construction, pricing, calibration and simulation.
#[derive(Debug, Error)]
pub enum CreditError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("calibration failed at bucket {bucket} (T = {maturity}y): {reason}")]
    Calibration {
        bucket: usize,
        maturity: f64,
        reason: String,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations; trace (bp): {trace:?}")]
    NonConvergence { iterations: usize, trace: Vec<f64> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CreditError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(CreditError::Domain(msg.into()))
}
