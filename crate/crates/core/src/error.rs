use thiserror::Error;

/// Errors raised by the solvers and the file formats around them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("annulus {k} is under-resolved: {samples} radial samples (need at least {required})")]
    Resolution { k: i32, samples: usize, required: usize },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("series launch is not accurate enough: next-term ratio {ratio:.3e} at r = {r_start}")]
    Precision { r_start: f64, ratio: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("Picard iteration failed in window starting at t = {t0}: {reason} (last change {residual:.3e})")]
    Window { t0: f64, reason: String, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
