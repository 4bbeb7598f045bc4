//! Scenario runner: resolves a [`ScenarioConfig`], runs one figure
//! scenario, and writes CSV tables, JSON sidecars and `manifest.json`.

mod classical;
pub mod config;
pub mod output;
mod quantum;
mod spin;
pub mod sweep;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::classical::ClassicalError;
use crate::heterodyne::HeterodyneError;
use crate::lindblad::LindbladError;
use crate::linalg::LinalgError;
use crate::phase_space::PhaseSpaceError;
use crate::spectral::SpectralError;

pub use config::{ScenarioConfig, ScenarioParams};
pub use output::{verify_manifest, Column, FileEntry, Manifest, ManifestBuilder, Table, MANIFEST_FILE};
pub use sweep::{run_sweep, SweepAxis, SweepPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    ClassicalLc,
    ClassicalTwo,
    QvdpLc,
    QvdpTraj,
    QvdpTwo,
    SpinLc,
    SpinTraj,
    SpinTwo,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 8] = [
        ScenarioId::ClassicalLc,
        ScenarioId::ClassicalTwo,
        ScenarioId::QvdpLc,
        ScenarioId::QvdpTraj,
        ScenarioId::QvdpTwo,
        ScenarioId::SpinLc,
        ScenarioId::SpinTraj,
        ScenarioId::SpinTwo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::ClassicalLc => "classical-lc",
            ScenarioId::ClassicalTwo => "classical-two",
            ScenarioId::QvdpLc => "qvdp-lc",
            ScenarioId::QvdpTraj => "qvdp-traj",
            ScenarioId::QvdpTwo => "qvdp-two",
            ScenarioId::SpinLc => "spin-lc",
            ScenarioId::SpinTraj => "spin-traj",
            ScenarioId::SpinTwo => "spin-two",
        }
    }

    /// plotgen figure ids fed by the scenario.
    pub fn figures(&self) -> &'static str {
        match self {
            ScenarioId::ClassicalLc => "fig1 fig2 fig3",
            ScenarioId::ClassicalTwo => "fig4 fig5",
            ScenarioId::QvdpLc => "fig6",
            ScenarioId::QvdpTraj => "fig7",
            ScenarioId::QvdpTwo => "fig8 fig9",
            ScenarioId::SpinLc => "fig10 (time evolution)",
            ScenarioId::SpinTraj => "fig10 (measurement)",
            ScenarioId::SpinTwo => "fig11 fig12",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ScenarioId::ClassicalLc => "noisy van-der-Pol limit cycle: trajectories, P(x,p), P(phi), spectrum",
            ScenarioId::ClassicalTwo => "coupled phase oscillators: P(phi_AB), observed frequency, spectra",
            ScenarioId::QvdpLc => "quantum van-der-Pol: Q(x,p) and Q(phi) in time",
            ScenarioId::QvdpTraj => "quantum van-der-Pol under heterodyne detection; current spectrum",
            ScenarioId::QvdpTwo => "two quantum van-der-Pol oscillators: Q(phi_AB), measured phases, spectra",
            ScenarioId::SpinLc => "spin-1/2: Q(theta,phi) and Q(phi) in time",
            ScenarioId::SpinTraj => "spin-1/2 under heterodyne detection",
            ScenarioId::SpinTwo => "two spins-1/2: Q(phi_AB), measured phases, spectra",
        }
    }

    pub fn valid_ids() -> Vec<&'static str> {
        Self::ALL.iter().map(|s| s.as_str()).collect()
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| ExperimentError::UnknownScenario {
            id: s.to_string(),
            valid: Self::valid_ids().join(", "),
        })
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown scenario id {id:?}; valid ids: {valid}")]
    UnknownScenario { id: String, valid: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("strict mode: {0}")]
    Strict(String),
    #[error("scenario {0} does not support sweeps")]
    NoSweep(String),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Heterodyne(#[from] HeterodyneError),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        ExperimentError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Short machine-readable error class.
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::UnknownScenario { .. } => "unknown-scenario",
            ExperimentError::InvalidConfig(_) => "invalid-config",
            ExperimentError::Io { .. } => "io",
            ExperimentError::Strict(_) => "strict",
            ExperimentError::NoSweep(_) => "no-sweep",
            ExperimentError::Classical(_) => "classical",
            ExperimentError::Lindblad(_) => "lindblad",
            ExperimentError::Heterodyne(_) => "heterodyne",
            ExperimentError::PhaseSpace(_) => "phase-space",
            ExperimentError::Linalg(_) => "linalg",
            ExperimentError::Spectral(_) => "spectral",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        if let ExperimentError::UnknownScenario { valid, .. } = self {
            v["valid_ids"] = serde_json::json!(valid.split(", ").collect::<Vec<_>>());
        }
        v
    }
}

/// Output writer plus the warnings raised during a run.
pub(crate) struct RunContext {
    pub out: ManifestBuilder,
    pub strict: bool,
    pub warnings: Vec<String>,
}

impl RunContext {
    /// Records a warning; in strict mode the run aborts instead.
    pub fn warn(&mut self, msg: impl Into<String>) -> Result<(), ExperimentError> {
        let msg = msg.into();
        if self.strict {
            return Err(ExperimentError::Strict(msg));
        }
        self.warnings.push(msg);
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    scenario: &'a str,
    figures: &'a str,
    unit_note: &'a str,
    warnings: &'a [String],
}

/// Runs one scenario into `out_dir` and returns the written manifest.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, strict: bool) -> Result<Manifest, ExperimentError> {
    config.validate()?;
    let mut ctx = RunContext { out: ManifestBuilder::create(out_dir)?, strict, warnings: Vec::new() };
    match &config.params {
        ScenarioParams::ClassicalLc(p) => classical::run_lc(p, &mut ctx)?,
        ScenarioParams::ClassicalTwo(p) => classical::run_two(p, &mut ctx)?,
        ScenarioParams::QvdpLc(p) => quantum::run_lc(p, &mut ctx)?,
        ScenarioParams::QvdpTraj(p) => quantum::run_traj(p, &mut ctx)?,
        ScenarioParams::QvdpTwo(p) => quantum::run_two(p, &mut ctx)?,
        ScenarioParams::SpinLc(p) => spin::run_lc(p, &mut ctx)?,
        ScenarioParams::SpinTraj(p) => spin::run_traj(p, &mut ctx)?,
        ScenarioParams::SpinTwo(p) => spin::run_two(p, &mut ctx)?,
    }
    let info = RunInfo {
        scenario: config.id.as_str(),
        figures: config.id.figures(),
        unit_note: "rates, frequencies and times are in units of the params' reference rate `unit`",
        warnings: &ctx.warnings,
    };
    ctx.out.write_json("run.json", &info)?;
    ctx.out.finish(config.id.as_str(), config.params_json(), config.seed())
}

/// `n` points from `lo` to `hi` inclusive (`lo` alone when n = 1).
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Suffix for per-parameter file names: 1.5 → "1p5", -2 → "m2".
pub(crate) fn tag(v: f64) -> String {
    output::format_value(v).replace('-', "m").replace('.', "p")
}
