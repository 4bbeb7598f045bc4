//! Conditional dynamics under continuous heterodyne detection.
//!
//! Each monitored channel (L, r) produces a complex demodulated current
//! I = √r⟨L⟩_m + dZ/dt with dZ = (dW_x + i dW_y)/√2, and conditions the
//! state through the innovation √r[(L − ⟨L⟩)ρ dZ* + ρ(L − ⟨L⟩)† dZ].

mod analysis;
mod sme;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::ClassicalError;
use crate::lindblad::{LindbladError, LindbladModel};
use crate::linalg::{LinalgError, Operator, C64};
use crate::spectral::SpectralError;

pub use analysis::{
    ensemble_mean, ensemble_mean_current, filter_current, heterodyne_current, measured_phase_distribution,
    measured_phase_series, measured_spectrum, EnsembleMean, MeasuredSpectrumOptions,
};
pub use sme::{evolve_sme, evolve_sme_ensemble, SmeOptions, SmeScheme, SmeSystem, SME_NEGATIVITY_LIMIT};

#[derive(Debug, Error)]
pub enum HeterodyneError {
    #[error("monitored channel {label}: {reason}")]
    ChannelMismatch { label: String, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trace drift {drift:e} at t={t} exceeds tolerance before renormalization (dt={dt}, try dt ≤ {suggested_dt})")]
    TraceDrift { t: f64, dt: f64, drift: f64, suggested_dt: f64 },
    #[error("conditional state eigenvalue {min_eigenvalue:e} at t={t} (dt={dt}, try dt ≤ {suggested_dt})")]
    NegativeEigenvalue { t: f64, dt: f64, min_eigenvalue: f64, suggested_dt: f64 },
    #[error("records are inconsistent: {0}")]
    RecordMismatch(String),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Histogram(#[from] ClassicalError),
}

/// A detected output port. Efficiency is always 1.
#[derive(Debug, Clone)]
pub struct MonitoredChannel {
    pub op: Operator,
    pub rate: f64,
    pub label: String,
}

impl MonitoredChannel {
    pub fn new(op: Operator, rate: f64, label: impl Into<String>) -> Result<Self, HeterodyneError> {
        let label = label.into();
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(HeterodyneError::ChannelMismatch {
                label,
                reason: format!("rate must be positive, got {rate}"),
            });
        }
        Ok(Self { op, rate, label })
    }

    /// Monitors the model jump with the given label.
    pub fn from_jump(model: &LindbladModel, label: &str) -> Result<Self, HeterodyneError> {
        let j = model
            .jumps()
            .iter()
            .find(|j| j.label == label)
            .ok_or_else(|| HeterodyneError::ChannelMismatch {
                label: label.into(),
                reason: "no jump with this label".into(),
            })?;
        Self::new(j.op.clone(), j.rate, label)
    }

    /// Index of the model jump this channel monitors.
    pub fn match_jump(&self, model: &LindbladModel) -> Result<usize, HeterodyneError> {
        if self.op.dim() != model.dim() {
            return Err(HeterodyneError::ChannelMismatch {
                label: self.label.clone(),
                reason: format!("dimension {} vs model {}", self.op.dim(), model.dim()),
            });
        }
        model
            .jumps()
            .iter()
            .position(|j| {
                j.op.max_abs_diff(&self.op) <= 1e-12 && (j.rate - self.rate).abs() <= 1e-12 * j.rate.max(1.0)
            })
            .ok_or_else(|| HeterodyneError::ChannelMismatch {
                label: self.label.clone(),
                reason: "operator and rate do not match any dissipator of the model".into(),
            })
    }
}

/// One heterodyne trajectory, sampled every `sample_every` integrator steps.
///
/// Sample k covers [t_k, t_k + Δ) with Δ = sample_every·dt. Expectations are
/// taken of the conditional state at t_k; `mean_expectations` and `noise`
/// are averages over the interval, so the current average is
/// √r·mean_expectations + noise. With `sample_every = 1` these are the
/// per-step values and `noise` is exactly dZ/dt of that step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeterodyneRecord {
    pub seed: u64,
    pub stream: u64,
    pub dt: f64,
    pub sample_every: usize,
    pub rates: Vec<f64>,
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// [channel][k]: ⟨L⟩_m(t_k).
    pub cond_expectations: Vec<Vec<C64>>,
    /// [channel][k]: interval average of ⟨L⟩_m.
    pub mean_expectations: Vec<Vec<C64>>,
    /// [channel][k]: interval average of dZ/dt.
    pub noise: Vec<Vec<C64>>,
    /// [observable][k]: extra expectations requested in the options.
    pub observables: Vec<Vec<C64>>,
    #[serde(skip)]
    pub snapshots: Vec<crate::lindblad::MeSample>,
}

/// Compares the recorded series; snapshots are ignored.
impl PartialEq for HeterodyneRecord {
    fn eq(&self, o: &Self) -> bool {
        self.seed == o.seed
            && self.stream == o.stream
            && self.dt == o.dt
            && self.sample_every == o.sample_every
            && self.rates == o.rates
            && self.labels == o.labels
            && self.times == o.times
            && self.cond_expectations == o.cond_expectations
            && self.mean_expectations == o.mean_expectations
            && self.noise == o.noise
            && self.observables == o.observables
    }
}

impl HeterodyneRecord {
    pub fn n_channels(&self) -> usize {
        self.rates.len()
    }

    pub fn sample_dt(&self) -> f64 {
        self.dt * self.sample_every as f64
    }

    pub fn first_index_at(&self, t_min: f64) -> Option<usize> {
        let eps = 1e-9 * self.sample_dt();
        self.times.iter().position(|&t| t >= t_min - eps)
    }
}
