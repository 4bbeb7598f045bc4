use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{HilbertLayout, Liouvillian, LindbladError, Rk4, DEFAULT_DENSE_DIM_BOUND};
use crate::linalg::{DensityOperator, Operator, C64};

/// Top-two Fock populations above which the truncation is flagged.
pub const TRUNCATION_POPULATION_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    /// Largest Hilbert-space dimension solved through the explicit
    /// superoperator.
    pub dense_dim_bound: usize,
    /// Target max-entry norm of L(ρ) for the integration path.
    pub tol: f64,
    /// Give up integrating after this much model time.
    pub max_time: f64,
    /// Relative pivot size below which the superoperator counts as singular.
    pub null_pivot_tol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            dense_dim_bound: DEFAULT_DENSE_DIM_BOUND,
            tol: 1e-10,
            max_time: 1e4,
            null_pivot_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyStateMethod {
    NullSpace,
    Integration,
}

/// Sum of the two highest Fock-level populations per bosonic mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub top_two_populations: Vec<f64>,
    pub warning: bool,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityOperator,
    pub method: SteadyStateMethod,
    /// max |L(ρ)| entry.
    pub residual: f64,
    /// Model time integrated (integration path only).
    pub integration_time: Option<f64>,
    pub truncation: Option<TruncationReport>,
}

/// Steady state through the explicit superoperator when dim ≤ the bound,
/// otherwise by integrating from the maximally mixed state.
pub fn steady_state(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyState, LindbladError> {
    if l.dim() <= opts.dense_dim_bound {
        steady_state_null_space(l, opts)
    } else {
        steady_state_integrate(l, opts)
    }
}

fn finish(
    l: &Liouvillian,
    x: DMatrix<C64>,
    method: SteadyStateMethod,
    integration_time: Option<f64>,
) -> Result<SteadyState, LindbladError> {
    let herm = (&x + x.adjoint()) * C64::new(0.5, 0.0);
    let tr = herm.trace();
    let herm = herm / tr;
    let residual = l.apply(&herm).iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let rho = DensityOperator::new(Operator::from_matrix(herm)?)?;
    let truncation = truncation_report(l.layout(), &rho);
    Ok(SteadyState {
        rho,
        method,
        residual,
        integration_time,
        truncation,
    })
}

/// Null vector of the superoperator with the trace condition replacing one
/// redundant row. A null space of dimension > 1 leaves the bordered matrix
/// singular and is reported as an error.
pub fn steady_state_null_space(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyState, LindbladError> {
    let n = l.dim();
    let mut m = l.superoperator();
    // rows of the diagonal elements are linearly dependent (Tr∘L = 0)
    for col in 0..n * n {
        m[(0, col)] = C64::new(0.0, 0.0);
    }
    for i in 0..n {
        m[(0, i + i * n)] = C64::new(1.0, 0.0);
    }
    let lu = m.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..n * n).map(|i| u[(i, i)].norm()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let small = pivots.iter().filter(|p| **p <= opts.null_pivot_tol * largest).count();
    if small > 0 {
        return Err(LindbladError::DegenerateSteadyState { null_dim: small + 1 });
    }
    let mut rhs = nalgebra::DVector::zeros(n * n);
    rhs[0] = C64::new(1.0, 0.0);
    let sol = lu.solve(&rhs).ok_or(LindbladError::DegenerateSteadyState { null_dim: 0 })?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    finish(l, x, SteadyStateMethod::NullSpace, None)
}

/// RK4 from the maximally mixed state until max |L(ρ)| < tol.
pub fn steady_state_integrate(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyState, LindbladError> {
    let n = l.dim();
    let mut dt = l.stable_step();
    let mut tmp = DMatrix::zeros(n, n);
    let mut lx = DMatrix::zeros(n, n);
    for _attempt in 0..4 {
        let mut x = DMatrix::<C64>::identity(n, n) / C64::new(n as f64, 0.0);
        let mut rk = Rk4::new(n);
        let check_every = 50usize;
        let max_steps = (opts.max_time / dt).ceil() as usize;
        let mut step = 0usize;
        let mut last_residual = f64::INFINITY;
        let mut diverged = false;
        while step < max_steps {
            for _ in 0..check_every {
                rk.step(l, &mut x, dt);
            }
            step += check_every;
            // keep roundoff from accumulating in the trace and Hermiticity
            let herm = (&x + x.adjoint()) * C64::new(0.5, 0.0);
            let tr = herm.trace();
            x = herm / tr;
            l.apply_into(&x, &mut lx, &mut tmp);
            let residual = lx.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
            if !residual.is_finite() || residual > 1e3 * last_residual.min(1.0) {
                diverged = true;
                break;
            }
            last_residual = residual;
            if residual < opts.tol {
                return finish(l, x, SteadyStateMethod::Integration, Some(step as f64 * dt));
            }
        }
        if !diverged {
            return Err(LindbladError::NonConvergence {
                t_max: opts.max_time,
                residual: last_residual,
            });
        }
        dt *= 0.5;
    }
    Err(LindbladError::NonConvergence {
        t_max: opts.max_time,
        residual: f64::INFINITY,
    })
}

/// Top-two Fock populations of each bosonic mode.
pub fn truncation_report(layout: HilbertLayout, rho: &DensityOperator) -> Option<TruncationReport> {
    let top_two = |p: &[f64]| p[p.len() - 1] + p[p.len() - 2];
    let tops = match layout {
        HilbertLayout::Boson { .. } => vec![top_two(&rho.populations())],
        HilbertLayout::TwoBosons { n_max } => {
            let d = n_max + 1;
            vec![
                top_two(&rho.partial_trace_second(d, d).populations()),
                top_two(&rho.partial_trace_first(d, d).populations()),
            ]
        }
        _ => return None,
    };
    let warning = tops.iter().any(|p| *p > TRUNCATION_POPULATION_LIMIT);
    Some(TruncationReport {
        top_two_populations: tops,
        warning,
    })
}
