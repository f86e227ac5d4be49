use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite state detected at frame {frame} (step {step}): {what}")]
    NonFinite { frame: usize, step: usize, what: String },

    #[error("pressure solve did not converge: {iterations} iterations, relative residual {residual:e}")]
    PressureSolve { iterations: usize, residual: f64 },

    #[error("SPH density fluctuation {fluctuation:.3}% exceeds abort limit (stiffness or time step misconfigured)")]
    DensityBlowup { fluctuation: f64 },

    #[error("neighbor query radius {requested} differs from build radius {built}")]
    RadiusMismatch { requested: f64, built: f64 },

    #[error("missing frame file {}", .0.display())]
    MissingFrame(PathBuf),

    #[error("malformed {kind} file: {msg}")]
    Format { kind: &'static str, msg: String },

    #[error(transparent)]
    Study(#[from] crate::study::StudyError),

    #[error(transparent)]
    Analytics(#[from] crate::analytics::AnalyticsError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
