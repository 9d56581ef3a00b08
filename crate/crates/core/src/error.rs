use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// Mathematical negative outcomes that the analysis pipeline treats as data
/// (A₂ divergence, missing duals) still surface here when an operation is
/// called directly; the pipeline catches them and records them per stage.
#[derive(Debug, Error)]
pub enum GaborError {
    #[error("incompatible discretization: {0}")]
    Divisibility(String),

    #[error("window support: {0}")]
    Support(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("singular weight: {0}")]
    SingularNode(String),

    #[error("no unique biorthogonal system: {0}")]
    DualNonexistence(String),

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("rectangle not reachable: {0}")]
    NotReachable(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = GaborError> = std::result::Result<T, E>;
