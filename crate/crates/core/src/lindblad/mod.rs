//! Unconditional open-system dynamics: models, the Liouvillian, master
//! equation integration, steady states and regression-theorem spectra.

mod correlation;
mod evolve;
mod liouvillian;
mod model;
mod steady;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::spectral::SpectralError;

pub use correlation::{correlation_function, correlation_spectrum, Correlation};
pub use evolve::{evolve_expectations, evolve_me, evolve_me_with, ExpectationSeries, MeSample};
pub use liouvillian::{Liouvillian, Rk4, DEFAULT_DENSE_DIM_BOUND};
pub use model::{
    build_qvdp_model, build_spin_model, build_two_qvdp_model, build_two_spin_model, HilbertLayout, Jump,
    LindbladModel, QvdpParams, SpinParams, TwoQvdpParams, TwoSpinParams, HAMILTONIAN_HERMITICITY_TOL,
};
pub use steady::{
    steady_state, steady_state_integrate, steady_state_null_space, truncation_report, SteadyState, SteadyStateMethod,
    SteadyStateOptions, TruncationReport, TRUNCATION_POPULATION_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state invariant violated at t = {t} with dt = {dt} ({cause}); try dt ≤ {suggested_dt:.3e}")]
    StepSize {
        t: f64,
        dt: f64,
        suggested_dt: f64,
        cause: String,
    },
    #[error("steady state not reached within t = {t_max} (residual {residual:e})")]
    NonConvergence { t_max: f64, residual: f64 },
    #[error("steady state is not unique (null space dimension {null_dim})")]
    DegenerateSteadyState { null_dim: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
