use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("rotation axis is not normalized (|axis| = {0})")]
    AxisNotNormalized(f64),
    #[error("mean spin is misaligned from x by {angle:.3e} rad; rotate into the x frame first")]
    MeanSpinMisaligned { angle: f64 },
    #[error("degenerate state: mean spin length is zero")]
    DegenerateState,
    #[error("resonant dressing (detuning = 0) is outside the model")]
    ResonantDressing,
    #[error("quadrature did not converge: estimated relative error {achieved:.3e} after {evaluations} evaluations")]
    QuadratureNotConverged { achieved: f64, evaluations: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),
    #[error(transparent)]
    Estimator(#[from] crate::estimators::EstimatorError),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
