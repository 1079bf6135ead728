use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric is not positive definite (tau = {tau}, |u|^2 = {u_norm_sq})")]
    NotPositiveDefinite { tau: f64, u_norm_sq: f64 },

    #[error("root finding did not converge in {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("backtracking line search failed after {halvings} step halvings")]
    StepFailure { halvings: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
