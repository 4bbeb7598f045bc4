//! Complex dense linear algebra on truncated bosonic and spin Hilbert spaces.
//!
//! Basis conventions: for a bosonic mode, index n is the Fock occupation
//! (0 = vacuum). For a spin-1/2, index 0 is |0⟩ (ground) and index 1 is
//! |1⟩ (excited). Tensor products put the first factor on the slow index.

mod constructors;
mod operator;
mod sparse;
mod state;

use thiserror::Error;

pub use constructors::{
    coherent_ket, fock_operators, pauli_operators, spin_coherent_ket, CoherentKet, FockOperators,
    PauliOperators, COHERENT_TAIL_LIMIT,
};
pub use operator::{tensor, trace_of_product, Operator};
pub use sparse::SparseOperator;
pub use state::{
    DensityOperator, Ket, DEFAULT_HERMITICITY_TOL, DEFAULT_TRACE_TOL, POSITIVITY_SLACK,
};

pub type C64 = nalgebra::Complex<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty Hilbert space")]
    EmptyDimension,
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Fock truncation n_max must be at least 1")]
    TruncationTooSmall,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("polar angle theta={theta} outside [0, pi]")]
    AngleOutOfRange { theta: f64 },
    #[error("trace deviates from 1 by {deviation:e}")]
    TraceNotUnit { deviation: f64 },
    #[error("operator is not Hermitian (max |A - A^dag| = {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("operator has negative eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
}

/// ln(n!) via the log-gamma function.
pub fn ln_factorial(n: usize) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}
