//! Husimi-Q distributions and phase distributions of bosonic modes and
//! spins-1/2.
//!
//! Phases follow φ = −arg α for bosons; spins use the azimuth of
//! |θ,φ⟩ = exp(−iφσ^z/2) exp(−iθσ^y/2)|1⟩. Phase distributions are evaluated
//! from closed-form Fourier series; [`oracle`] holds quadrature versions used
//! only for validation.

mod boson;
pub mod oracle;
mod spin;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, C64};

pub use boson::{husimi_q_boson, phase_diff_dist_boson, phase_diff_fourier_boson, phase_dist_boson, phase_fourier_boson};
pub use spin::{husimi_q_spin, phase_diff_dist_spins, phase_diff_fourier_spins, phase_dist_spin, phase_fourier_spin};

pub const MIN_PHASE_POINTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseSpaceError {
    #[error("phase grid needs at least {MIN_PHASE_POINTS} points, got {0}")]
    GridTooSmall(usize),
    #[error("state of dimension {found} does not fit a {expected} layout")]
    WrongDimension { expected: &'static str, found: usize },
    #[error("empty or non-finite grid")]
    BadGrid,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Uniform grid φ_k = 2πk/n on [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub n_phi: usize,
}

impl PhaseGrid {
    pub fn new(n_phi: usize) -> Result<Self, PhaseSpaceError> {
        if n_phi < MIN_PHASE_POINTS {
            return Err(PhaseSpaceError::GridTooSmall(n_phi));
        }
        Ok(Self { n_phi })
    }

    pub fn spacing(&self) -> f64 {
        std::f64::consts::TAU / self.n_phi as f64
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi).map(|k| k as f64 * self.spacing()).collect()
    }
}

/// Q(φ) = (1/2π) Re[c₀ + 2 Σ_{k≥1} c_k e^{ikφ}], the real Fourier series of
/// a phase distribution (c_{−k} = c_k*).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFourier {
    pub coeffs: Vec<C64>,
}

impl PhaseFourier {
    pub fn eval(&self, phi: f64) -> f64 {
        let mut acc = self.coeffs.first().map(|c| c.re).unwrap_or(0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            acc += 2.0 * (c * C64::from_polar(1.0, k as f64 * phi)).re;
        }
        acc / std::f64::consts::TAU
    }

    pub fn on_grid(&self, grid: &PhaseGrid) -> PhaseDistribution {
        let phis = grid.phis();
        let values = phis.iter().map(|&p| self.eval(p)).collect();
        PhaseDistribution { phis, values }
    }
}

/// Phase density sampled on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub phis: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    pub fn spacing(&self) -> f64 {
        std::f64::consts::TAU / self.phis.len() as f64
    }

    /// Rectangle rule, exact for trigonometric polynomials of degree < n.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }

    pub fn argmax_phi(&self) -> f64 {
        self.phis[self.argmax()]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// max |Q(φ) − 1/2π|
    pub fn max_deviation_from_flat(&self) -> f64 {
        let flat = 1.0 / std::f64::consts::TAU;
        self.values.iter().fold(0.0, |m, v| f64::max(m, (v - flat).abs()))
    }
}

/// Axes of a sampled Husimi-Q surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceAxes {
    /// α = x + ip.
    Plane { xs: Vec<f64>, ps: Vec<f64> },
    Sphere { thetas: Vec<f64>, phis: Vec<f64> },
}

/// Q on a grid; `values` is row-major over (first axis, second axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSurface {
    pub axes: SurfaceAxes,
    pub values: Vec<f64>,
    /// Grid reaches beyond |α| = 0.8·√n_max where truncated coherent
    /// states are unreliable.
    pub truncation_warning: bool,
}

fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
            let right = if i + 1 < n { xs[i + 1] - xs[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

impl QSurface {
    pub fn shape(&self) -> (usize, usize) {
        match &self.axes {
            SurfaceAxes::Plane { xs, ps } => (xs.len(), ps.len()),
            SurfaceAxes::Sphere { thetas, phis } => (thetas.len(), phis.len()),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape().1 + j]
    }

    /// Trapezoid integral: ∫dx dp Q on the plane, ∫sinθ dθ dφ Q on the
    /// sphere (φ treated as periodic when the grid spans [0, 2π)).
    pub fn integral(&self) -> f64 {
        let (wa, wb, sin_weight) = match &self.axes {
            SurfaceAxes::Plane { xs, ps } => (trapezoid_weights(xs), trapezoid_weights(ps), false),
            SurfaceAxes::Sphere { thetas, phis } => {
                let h = if phis.len() > 1 { phis[1] - phis[0] } else { 0.0 };
                let periodic = (phis.len() as f64 * h - std::f64::consts::TAU).abs() < 1e-9;
                let wphi = if periodic { vec![h; phis.len()] } else { trapezoid_weights(phis) };
                (trapezoid_weights(thetas), wphi, true)
            }
        };
        let thetas = match &self.axes {
            SurfaceAxes::Sphere { thetas, .. } => thetas.clone(),
            _ => Vec::new(),
        };
        let nb = wb.len();
        let mut acc = 0.0;
        for (i, wi) in wa.iter().enumerate() {
            let s = if sin_weight { thetas[i].sin() } else { 1.0 };
            for (j, wj) in wb.iter().enumerate() {
                acc += wi * wj * s * self.values[i * nb + j];
            }
        }
        acc
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Largest |α| at which a truncated coherent state is trusted.
pub fn coherent_validity_radius(n_max: usize) -> f64 {
    0.8 * (n_max as f64).sqrt()
}
