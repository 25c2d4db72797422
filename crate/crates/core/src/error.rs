use thiserror::Error;

/// Errors surfaced by the laboratory's operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    InvalidDimension,

    #[error("pool must contain at least one point")]
    EmptyPool,

    #[error("tilt weights degenerate: effective sample size {ess:.2} below floor {floor}")]
    DegenerateTilt { ess: f64, floor: f64 },

    #[error("tilt diverged to a non-finite value at step {step}")]
    Divergence { step: usize },

    #[error("ensemble contains no paths")]
    EmptyEnsemble,

    #[error("paths do not share a common time grid")]
    GridMismatch,

    #[error("dimension {dim} exceeds the limit {max} for this operation")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("assistant function construction failed: {reason}")]
    ConstructionFailed { reason: String },

    #[error("schedule scale must be positive (got {value})")]
    InvalidScale { value: f64 },

    #[error("schedule integrity violated: {reason}")]
    ScheduleIntegrity { reason: String },

    #[error("tabulated h must be non-increasing (rises at index {index})")]
    InvalidH { index: usize },

    #[error("grid backend supports dimension <= 2 (got {dim})")]
    GridUnsupported { dim: usize },

    #[error("requested {requested} modes but the grid supports at most {max}")]
    ResolutionTooCoarse { requested: usize, max: usize },

    #[error("hypothesis violated: {reason}")]
    HypothesisViolation { reason: String },

    #[error("input is not {t}-uniformly log-concave: {reason}")]
    NotUniformlyLogConcave { t: f64, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed pool file: {0}")]
    MalformedPool(String),
}
