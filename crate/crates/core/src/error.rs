use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("random regular graph generation failed after {attempts} attempts (seed {seed})")]
    GenerationFailure { seed: u64, attempts: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The objective returned a non-finite value; `last_good` is the last
    /// iterate at which it was finite.
    #[error("objective became non-finite; last good iterate {last_good:?}")]
    NonFiniteObjective { last_good: Vec<f64> },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    #[error("extrapolation refused: target {target} outside observed range [{min}, {max}]")]
    ExtrapolationRefused { target: f64, min: f64, max: f64 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("collapse failed: fitted scatter {fitted} is not below the uncollapsed scatter {baseline}")]
    CollapseFailure { fitted: f64, baseline: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
