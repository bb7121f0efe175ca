//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("position ({0}, {1}) is outside the PML-free interior")]
    OutsideInterior(f64, f64),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("frequency mismatch: expected {expected}, got {got}")]
    FrequencyMismatch { expected: f64, got: f64 },

    #[error("energy conservation violated: |sum(omega) - sum(nu)| = {0}")]
    EnergyConservation(f64),

    #[error("excitation order {0} has no closed-form connected Green's function")]
    UnsupportedExcitationOrder(usize),

    #[error("unsupported particle number {0} (max 3)")]
    UnsupportedParticleNumber(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
