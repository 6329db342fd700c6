use thiserror::Error;

/// Errors produced by the photocount library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("{0} requires a resonant drive (delta = 0)")]
    NotResonant(&'static str),

    #[error("{0} requires unit detector efficiency (eta = 1)")]
    NotUnitEfficiency(&'static str),

    #[error("the emitter does not fluoresce (zero steady-state excitation)")]
    NoFluorescence,

    #[error("waiting-time grid would need {0} nodes, above the configured limit")]
    GridTooLarge(usize),

    #[error("Richardson check failed: f(h) = {coarse}, f(h/2) = {fine}")]
    Richardson { coarse: f64, fine: f64 },

    #[error("parameter carries no Fisher information at this point")]
    Degenerate,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("click probability {0} in one step is not below 1; reduce dt")]
    StepTooLarge(f64),

    #[error("estimate left the trust region: |delta theta| = {step} exceeds {limit}")]
    TrustRegion { step: f64, limit: f64 },

    #[error("every candidate has zero likelihood")]
    AllCandidatesExcluded,
    #[error("malformed record: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
