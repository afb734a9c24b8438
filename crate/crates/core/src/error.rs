use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("vector is not unit norm (norm = {norm})")]
    NotUnit { norm: f64 },

    #[error("matrix is not Hermitian (‖m − m†‖ = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no trackable branch: every RDM sample is degenerate")]
    NoTrackableBranch,

    #[error("window [{t_a}, {t_b}] holds {found} samples, need at least {needed}")]
    WindowTooSparse {
        t_a: u64,
        t_b: u64,
        found: usize,
        needed: usize,
    },

    #[error("pointer candidate unresolved: ρ̄ eigenvalue gap {gap:e} below threshold")]
    CandidateUnresolved { gap: f64 },

    #[error("singular H_αβ block (|det| = {det:e}, scale² = {scale_sqr:e})")]
    SingularBlock { det: f64, scale_sqr: f64 },

    #[error("ratio undefined: ‖ΔH‖ vanishes")]
    UndefinedRatio,

    #[error("too few samples: {got} (need {needed})")]
    TooFewSamples { got: usize, needed: usize },

    #[error("observer aborted evolution after {completed} of {requested} steps: {reason}")]
    ObserverAborted {
        completed: usize,
        requested: usize,
        reason: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
