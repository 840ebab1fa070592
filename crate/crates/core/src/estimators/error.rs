use super::FitResult;

#[derive(Debug, thiserror::Error)]
pub enum EstimatorError {
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("data contain non-finite values or non-positive uncertainties")]
    InvalidData,
    #[error("initial guess has {got} entries, model has {expected} parameters")]
    ParameterCount { expected: usize, got: usize },
    #[error("fit did not converge after {} iterations (residual norm {:.6e})", .0.n_iterations, .0.residual_norm)]
    NotConverged(Box<FitResult>),
    #[error("abscissa is degenerate (all points coincide)")]
    DegenerateAbscissa,
    #[error("regressor is rank deficient for trap {trap}")]
    RankDeficient { trap: usize },
    #[error("variance is consistent with zero")]
    ZeroVariance,
    #[error("fringe is underdetermined: {0}")]
    Underdetermined(String),
    #[error("normal matrix is singular")]
    Singular,
}
