use thiserror::Error;

/// Errors from constructing or validating spectral fields.
#[derive(Debug, Error)]
pub enum FieldError {
    #[error("non-finite coefficient at mode {mode}")]
    NonFinite { mode: usize },
    #[error("cannot shrink field from {from} to {to} modes without dropping coefficients")]
    WouldTruncate { from: usize, to: usize },
}

/// Errors from the time integrator.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solution left the finite range at t = {t} (step {step})")]
    NonFinite { t: f64, step: usize },
    #[error("initial data has {got} modes but the solver bandwidth is {bandwidth}")]
    InitialDataTooWide { got: usize, bandwidth: usize },
    #[error("invalid solver configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors from the eigenvalue bound machinery.
#[derive(Debug, Error)]
pub enum EigenError {
    #[error("eigensolver failed to certify the top eigenpair (residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("n = {n} is below the feasibility threshold sqrt(2)*C_phi = {n_min:.3}")]
    Infeasible { n: usize, n_min: f64 },
}

/// Errors from the scalar bounding ODE.
#[derive(Debug, Error)]
pub enum BoundError {
    #[error("invalid bound parameters: {reason}")]
    InvalidParams { reason: String },
}

/// Errors from the verification pipeline.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
