//! Rigorous a-posteriori verification for the surface growth equation
//! `u_t = -u_xxxx - ((u_x)^2)_xx` on the torus with mean-zero data.
//!
//! The crate computes a spectral Galerkin approximation, bounds the
//! numerical range of the linearization around it (either by a worst-case
//! sup-norm estimate or by a finite-dimensional eigenvalue computation with
//! a rigorous tail correction), and integrates a scalar ODE that certifies
//! an `H^1` bound on the distance to the true solution. If the combined
//! smallness criterion is met the true solution is globally smooth.

pub mod bound;
pub mod eigen;
pub mod error;
pub mod fft;
pub mod field;
pub mod solver;
pub mod verify;

pub use bound::{
    advance_bound, method1_coefficients, method2_coefficients, optimize_params,
    residual_h_minus1, BoundParams, ErrorBoundState, StepCoefficients,
};
pub use eigen::{
    assemble, c_phi, convergence_study, lambda_n, rigorous_bound, worst_case_bound,
    ConvergenceRecord, EigenBoundReport, EigenPair, OperatorMatrix,
};
pub use error::{BoundError, EigenError, FieldError, SolverError, VerifyError};
pub use field::{FourierField, Harmonic};
pub use solver::{integrate, SolverConfig, Stepper, Trajectory};
pub use verify::{
    compare_methods, run, ComparisonOutcome, Method, StepRecord, TraceRecord,
    VerificationConfig, VerificationReport, Verdict,
};
