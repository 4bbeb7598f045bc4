//! Noisy classical limit-cycle oscillators.
//!
//! A single van-der-Pol oscillator obeys
//! dα = (−iωα + κ₁α/2 − κ₂|α|²α) dt + σ (dW_x + i dW_y),
//! two phase-reduced oscillators obey
//! dφ_A = (δ/2 + (V/2) sin(φ_B − φ_A)) dt + (σ/√2) dW_A and the mirror
//! equation for φ_B. Phases follow φ = −arg α.

mod deterministic;
mod histogram;
mod sde;
mod spectrum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::C64;
use crate::spectral::SpectralError;

pub use deterministic::{integrate_coupled_vdp, integrate_vdp_rk4, CoupledVdpParams};
pub use histogram::{histogram_phase, histogram_radius, histogram_xy, HistogramDist, HistogramDomain, PhaseSource, XyGrid};
pub use sde::{simulate_coupled_phases, simulate_vdp, InitialPhases};
pub use spectrum::{classical_correlation, classical_spectrum, observed_frequency_difference, ClassicalSpectrumOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("at least one trajectory is required")]
    NoTrajectories,
    #[error("no samples at or after t = {t_min}")]
    EmptySampleSet { t_min: f64 },
    #[error("need at least {min} bins, got {got}")]
    TooFewBins { min: usize, got: usize },
    #[error("snapshot time {t} outside the recorded range [0, {t_end}]")]
    SnapshotOutOfRange { t: f64, t_end: f64 },
    #[error("stationary segment of {available} samples is shorter than the requested {required} lags")]
    SegmentTooShort { available: usize, required: usize },
    #[error("trajectory kind mismatch: {0}")]
    KindMismatch(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdpParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub omega: f64,
    pub sigma2: f64,
}

impl VdpParams {
    pub fn validate(&self) -> Result<(), ClassicalError> {
        let all = [self.kappa1, self.kappa2, self.omega, self.sigma2];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(ClassicalError::NonFinite("van-der-Pol parameter"));
        }
        if self.kappa1 <= 0.0 || self.kappa2 <= 0.0 {
            return Err(ClassicalError::InvalidParams(format!(
                "kappa1 and kappa2 must be positive (got {}, {})",
                self.kappa1, self.kappa2
            )));
        }
        if self.sigma2 < 0.0 {
            return Err(ClassicalError::InvalidParams(format!("sigma2 = {} < 0", self.sigma2)));
        }
        Ok(())
    }

    /// Limit-cycle radius √(κ₁/2κ₂).
    pub fn r0(&self) -> f64 {
        (self.kappa1 / (2.0 * self.kappa2)).sqrt()
    }

    /// Large-amplitude Lorentzian full width σ²/r₀².
    pub fn linewidth(&self) -> f64 {
        self.sigma2 / (self.r0() * self.r0())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledPhaseParams {
    pub delta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub sigma2: f64,
}

impl CoupledPhaseParams {
    pub fn validate(&self) -> Result<(), ClassicalError> {
        if ![self.delta, self.v, self.sigma2].iter().all(|x| x.is_finite()) {
            return Err(ClassicalError::NonFinite("phase-oscillator parameter"));
        }
        if self.v < 0.0 {
            return Err(ClassicalError::InvalidParams(format!("V = {} < 0", self.v)));
        }
        if self.sigma2 < 0.0 {
            return Err(ClassicalError::InvalidParams(format!("sigma2 = {} < 0", self.sigma2)));
        }
        Ok(())
    }

    /// Noiseless locking phase arcsin(δ/V), if |δ| ≤ V.
    pub fn locking_phase(&self) -> Option<f64> {
        (self.v > 0.0 && self.delta.abs() <= self.v).then(|| (self.delta / self.v).asin())
    }

    /// Noiseless mean beat frequency √(δ² − V²) (signed like δ), zero when locked.
    pub fn beat_frequency(&self) -> f64 {
        if self.delta.abs() <= self.v {
            0.0
        } else {
            self.delta.signum() * (self.delta * self.delta - self.v * self.v).sqrt()
        }
    }
}

/// Step size, horizon and ensemble size shared by the integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Record every k-th step (k ≥ 1).
    pub sample_every: usize,
}

impl IntegrationSpec {
    pub fn new(dt: f64, t_final: f64, n_traj: usize, seed: u64) -> Self {
        Self {
            dt,
            t_final,
            n_traj,
            seed,
            sample_every: 1,
        }
    }

    pub fn with_sample_every(mut self, k: usize) -> Self {
        self.sample_every = k.max(1);
        self
    }

    pub fn validate(&self) -> Result<(), ClassicalError> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(ClassicalError::NonPositiveStep(self.dt));
        }
        if !self.t_final.is_finite() || self.t_final <= 0.0 {
            return Err(ClassicalError::NonPositiveDuration(self.t_final));
        }
        if self.n_traj == 0 {
            return Err(ClassicalError::NoTrajectories);
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }

    pub fn n_samples(&self) -> usize {
        self.n_steps() / self.sample_every.max(1) + 1
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_every.max(1) as f64
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let h = self.sample_interval();
        (0..self.n_samples()).map(|k| k as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum TrajectoryValues {
    Amplitude(Vec<C64>),
    /// Unwrapped (φ_A, φ_B).
    PhasePair(Vec<[f64; 2]>),
    AmplitudePair(Vec<[C64; 2]>),
}

impl TrajectoryValues {
    pub fn len(&self) -> usize {
        match self {
            TrajectoryValues::Amplitude(v) => v.len(),
            TrajectoryValues::PhasePair(v) => v.len(),
            TrajectoryValues::AmplitudePair(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Master seed and stream index that produced the record.
    pub seed: u64,
    pub stream: u64,
    /// Integrator step.
    pub dt: f64,
    /// Uniform spacing of `times`.
    pub sample_dt: f64,
    pub times: Vec<f64>,
    pub values: TrajectoryValues,
}

impl TrajectoryRecord {
    /// Index of the first sample with t ≥ t_min.
    pub fn first_index_at(&self, t_min: f64) -> Option<usize> {
        let tol = 1e-9 * self.sample_dt;
        self.times.iter().position(|&t| t >= t_min - tol)
    }

    /// Phase φ = −arg α for amplitudes, the requested oscillator phase or
    /// the difference φ_A − φ_B for phase pairs.
    pub fn phase_series(&self, source: PhaseSource) -> Result<Vec<f64>, ClassicalError> {
        match (&self.values, source) {
            (TrajectoryValues::Amplitude(a), PhaseSource::Amplitude) => Ok(a.iter().map(|z| -z.arg()).collect()),
            (TrajectoryValues::PhasePair(p), PhaseSource::A) => Ok(p.iter().map(|x| x[0]).collect()),
            (TrajectoryValues::PhasePair(p), PhaseSource::B) => Ok(p.iter().map(|x| x[1]).collect()),
            (TrajectoryValues::PhasePair(p), PhaseSource::Difference) => Ok(p.iter().map(|x| x[0] - x[1]).collect()),
            (TrajectoryValues::AmplitudePair(p), PhaseSource::A) => Ok(p.iter().map(|x| -x[0].arg()).collect()),
            (TrajectoryValues::AmplitudePair(p), PhaseSource::B) => Ok(p.iter().map(|x| -x[1].arg()).collect()),
            (TrajectoryValues::AmplitudePair(p), PhaseSource::Difference) => {
                Ok(p.iter().map(|x| (x[1] * x[0].conj()).arg()).collect())
            }
            _ => Err(ClassicalError::KindMismatch("phase source does not match trajectory values")),
        }
    }
}

pub(crate) fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(std::f64::consts::TAU)
}
