use thiserror::Error;

/// Errors reported by the treecode library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("interpolation degree must be at least 1")]
    DegenerateDegree,

    #[error("invalid interval [{a}, {b}]: left endpoint must be less than right")]
    InvalidInterval { a: f64, b: f64 },

    #[error("kernel is singular at r = 0 with epsilon = 0")]
    SingularAtOrigin,

    #[error("particle system is empty")]
    EmptySystem,

    #[error("reference field is identically zero; relative error undefined")]
    ZeroReference,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed particle file: {0}")]
    MalformedParticleFile(String),

    #[error("malformed report row: {0}")]
    MalformedReport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
