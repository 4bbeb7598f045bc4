//! Scenario parameters. Each scenario has a versioned preset under
//! `presets/<id>.toml`; config files and `key=value` overrides are merged
//! on top of it key by key before the typed parameters are parsed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentError, ScenarioId};

pub(crate) fn preset_text(id: ScenarioId) -> &'static str {
    match id {
        ScenarioId::ClassicalLc => include_str!("../../presets/classical-lc.toml"),
        ScenarioId::ClassicalTwo => include_str!("../../presets/classical-two.toml"),
        ScenarioId::QvdpLc => include_str!("../../presets/qvdp-lc.toml"),
        ScenarioId::QvdpTraj => include_str!("../../presets/qvdp-traj.toml"),
        ScenarioId::QvdpTwo => include_str!("../../presets/qvdp-two.toml"),
        ScenarioId::SpinLc => include_str!("../../presets/spin-lc.toml"),
        ScenarioId::SpinTraj => include_str!("../../presets/spin-traj.toml"),
        ScenarioId::SpinTwo => include_str!("../../presets/spin-two.toml"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLcParams {
    pub unit: String,
    pub seed: u64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub omega: f64,
    pub sigma2: f64,
    pub deterministic_alpha0: Vec<[f64; 2]>,
    pub deterministic_t_final: f64,
    pub alpha0: [f64; 2],
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
    pub n_traj: usize,
    pub n_shown: usize,
    pub snapshot_times: Vec<f64>,
    pub xy_half_width: f64,
    pub xy_bins: usize,
    pub phase_bins: usize,
    pub spectrum_n_traj: usize,
    pub spectrum_dt: f64,
    pub spectrum_sample_every: usize,
    pub spectrum_t_min: f64,
    pub spectrum_t_final: f64,
    pub spectrum_max_lag: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub fit_half_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalTwoParams {
    pub unit: String,
    pub seed: u64,
    pub delta: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub t_final: f64,
    pub t_min: f64,
    pub n_traj: usize,
    pub phase_bins: usize,
    pub hist_sigma2: f64,
    #[serde(rename = "hist_V")]
    pub hist_v: Vec<f64>,
    #[serde(rename = "freq_V")]
    pub freq_v: f64,
    pub freq_delta: [f64; 2],
    pub freq_n_delta: usize,
    pub freq_sigma2: Vec<f64>,
    pub freq_n_traj: usize,
    pub freq_t_final: f64,
    pub spectrum_sigma2: f64,
    #[serde(rename = "spectrum_V")]
    pub spectrum_v: Vec<f64>,
    pub spectrum_n_traj: usize,
    pub spectrum_max_lag: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub bin_width: f64,
    pub sweep_delta: [f64; 2],
    pub sweep_n_delta: usize,
    #[serde(rename = "sweep_V")]
    pub sweep_v: [f64; 2],
    #[serde(rename = "sweep_n_V")]
    pub sweep_n_v: usize,
    pub sweep_sigma2_per_delta: f64,
    pub sweep_n_traj: usize,
    pub sweep_t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvdpLcParams {
    pub unit: String,
    pub seed: u64,
    pub omega: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
    pub n_max: usize,
    pub alpha0: [f64; 2],
    pub dt: f64,
    pub times: Vec<f64>,
    pub xy_half_width: f64,
    pub xy_points: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvdpTrajParams {
    pub unit: String,
    pub seed: u64,
    pub omega: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
    pub n_max: usize,
    pub alpha0: [f64; 2],
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
    pub n_traj: usize,
    pub n_shown: usize,
    pub xy_half_width: f64,
    pub xy_points: usize,
    pub spectrum_n_traj: usize,
    pub spectrum_t_final: f64,
    pub spectrum_sample_every: usize,
    pub segment_time: f64,
    pub window_width: f64,
    pub tau_max: f64,
    pub d_tau: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvdpTwoParams {
    pub unit: String,
    pub seed: u64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
    pub n_max: usize,
    pub lock_delta: f64,
    #[serde(rename = "lock_V")]
    pub lock_v: Vec<f64>,
    pub n_phi: usize,
    pub sme_n_max: usize,
    pub sme_dt: f64,
    pub sme_sample_every: usize,
    pub sme_t_final: f64,
    pub sme_t_min: f64,
    pub sme_n_traj: usize,
    pub tau_f: f64,
    pub phase_bins: usize,
    pub spectra_delta: f64,
    #[serde(rename = "spectra_V")]
    pub spectra_v: Vec<f64>,
    pub tau_max: f64,
    pub d_tau: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub spectrum_n_traj: usize,
    pub spectrum_t_final: f64,
    pub segment_time: f64,
    pub sweep_n_max: usize,
    pub sweep_delta: [f64; 2],
    pub sweep_n_delta: usize,
    #[serde(rename = "sweep_V")]
    pub sweep_v: [f64; 2],
    #[serde(rename = "sweep_n_V")]
    pub sweep_n_v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinLcParams {
    pub unit: String,
    pub seed: u64,
    pub omega: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub theta0: f64,
    pub phi0: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub n_theta: usize,
    pub n_phi_sphere: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinTrajParams {
    pub unit: String,
    pub seed: u64,
    pub omega: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub theta0: f64,
    pub phi0: f64,
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
    pub n_traj: usize,
    pub n_shown: usize,
    pub spectrum_n_traj: usize,
    pub spectrum_t_final: f64,
    pub spectrum_sample_every: usize,
    pub segment_time: f64,
    pub window_width: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinTwoParams {
    pub unit: String,
    pub seed: u64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub lock_delta: f64,
    #[serde(rename = "lock_V")]
    pub lock_v: Vec<f64>,
    pub n_phi: usize,
    pub sme_dt: f64,
    pub sme_sample_every: usize,
    pub sme_t_final: f64,
    pub sme_t_min: f64,
    pub sme_n_traj: usize,
    pub tau_f: f64,
    pub phase_bins: usize,
    pub spectra_delta: f64,
    #[serde(rename = "spectra_V")]
    pub spectra_v: Vec<f64>,
    pub tau_max: f64,
    pub d_tau: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub spectrum_n_traj: usize,
    pub spectrum_t_final: f64,
    pub segment_time: f64,
    pub sweep_delta: [f64; 2],
    pub sweep_n_delta: usize,
    #[serde(rename = "sweep_V")]
    pub sweep_v: [f64; 2],
    #[serde(rename = "sweep_n_V")]
    pub sweep_n_v: usize,
}

/// Typed parameters of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    ClassicalLc(ClassicalLcParams),
    ClassicalTwo(ClassicalTwoParams),
    QvdpLc(QvdpLcParams),
    QvdpTraj(QvdpTrajParams),
    QvdpTwo(QvdpTwoParams),
    SpinLc(SpinLcParams),
    SpinTraj(SpinTrajParams),
    SpinTwo(SpinTwoParams),
}

/// A scenario id plus its fully resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub params: ScenarioParams,
}

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidConfig(msg.into())
}

fn preset_table(id: ScenarioId) -> toml::Table {
    let doc: toml::Table = toml::from_str(preset_text(id)).expect("committed preset parses");
    match doc.get(id.as_str()) {
        Some(toml::Value::Table(t)) => t.clone(),
        _ => panic!("preset for {} lacks its section", id.as_str()),
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_override_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.to_string())),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

fn to_params(id: ScenarioId, table: toml::Table) -> Result<ScenarioParams, ExperimentError> {
    let v = toml::Value::Table(table);
    let err = |e: toml::de::Error| invalid(format!("{}: {}", id.as_str(), e.message()));
    Ok(match id {
        ScenarioId::ClassicalLc => ScenarioParams::ClassicalLc(v.try_into().map_err(err)?),
        ScenarioId::ClassicalTwo => ScenarioParams::ClassicalTwo(v.try_into().map_err(err)?),
        ScenarioId::QvdpLc => ScenarioParams::QvdpLc(v.try_into().map_err(err)?),
        ScenarioId::QvdpTraj => ScenarioParams::QvdpTraj(v.try_into().map_err(err)?),
        ScenarioId::QvdpTwo => ScenarioParams::QvdpTwo(v.try_into().map_err(err)?),
        ScenarioId::SpinLc => ScenarioParams::SpinLc(v.try_into().map_err(err)?),
        ScenarioId::SpinTraj => ScenarioParams::SpinTraj(v.try_into().map_err(err)?),
        ScenarioId::SpinTwo => ScenarioParams::SpinTwo(v.try_into().map_err(err)?),
    })
}

impl ScenarioConfig {
    /// Committed preset values.
    pub fn preset(id: ScenarioId) -> Self {
        Self::from_table(id, preset_table(id)).expect("committed preset is valid")
    }

    fn from_table(id: ScenarioId, table: toml::Table) -> Result<Self, ExperimentError> {
        let cfg = Self { id, params: to_params(id, table)? };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Preset, then the file's `[<id>]` section (or the `params` of a
    /// `manifest.json`), then `key=value` overrides.
    pub fn load(id: ScenarioId, file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ExperimentError> {
        let mut table = preset_table(id);
        if let Some(path) = file {
            for (k, v) in read_section(id, path)? {
                table.insert(k, v);
            }
        }
        for (k, v) in overrides {
            table.insert(k.clone(), parse_override_value(v));
        }
        Self::from_table(id, table)
    }

    pub fn seed(&self) -> u64 {
        match &self.params {
            ScenarioParams::ClassicalLc(p) => p.seed,
            ScenarioParams::ClassicalTwo(p) => p.seed,
            ScenarioParams::QvdpLc(p) => p.seed,
            ScenarioParams::QvdpTraj(p) => p.seed,
            ScenarioParams::QvdpTwo(p) => p.seed,
            ScenarioParams::SpinLc(p) => p.seed,
            ScenarioParams::SpinTraj(p) => p.seed,
            ScenarioParams::SpinTwo(p) => p.seed,
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        let v = match &self.params {
            ScenarioParams::ClassicalLc(p) => serde_json::to_value(p),
            ScenarioParams::ClassicalTwo(p) => serde_json::to_value(p),
            ScenarioParams::QvdpLc(p) => serde_json::to_value(p),
            ScenarioParams::QvdpTraj(p) => serde_json::to_value(p),
            ScenarioParams::QvdpTwo(p) => serde_json::to_value(p),
            ScenarioParams::SpinLc(p) => serde_json::to_value(p),
            ScenarioParams::SpinTraj(p) => serde_json::to_value(p),
            ScenarioParams::SpinTwo(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialize")
    }

    /// Rates finite and ≥ 0, steps and durations positive, counts nonzero.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let json = self.params_json();
        let obj = json.as_object().expect("parameters are a map");
        for (k, v) in obj {
            let nums: Vec<f64> = match v {
                serde_json::Value::Number(n) => vec![n.as_f64().unwrap_or(f64::NAN)],
                serde_json::Value::Array(a) => a
                    .iter()
                    .flat_map(|x| match x {
                        serde_json::Value::Array(inner) => inner.iter().filter_map(|y| y.as_f64()).collect(),
                        other => other.as_f64().into_iter().collect::<Vec<_>>(),
                    })
                    .collect(),
                _ => continue,
            };
            if nums.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{k} must be finite")));
            }
            let is_rate = k.starts_with("kappa")
                || k.starts_with("gamma")
                || k.starts_with("sigma2")
                || k.ends_with("sigma2")
                || k.ends_with("_V")
                || k == "V";
            if is_rate && nums.iter().any(|&x| x < 0.0) {
                return Err(invalid(format!("{k} is a rate and must be ≥ 0")));
            }
            let positive = k == "dt"
                || k.ends_with("_dt")
                || k.starts_with("t_final")
                || k.ends_with("t_final")
                || k.starts_with("n_")
                || k.contains("_n_")
                || k.ends_with("_every")
                || k == "tau_max"
                || k == "d_tau"
                || k == "tau_f"
                || k.ends_with("_bins")
                || k == "segment_time";
            if positive && nums.iter().any(|&x| x <= 0.0) {
                return Err(invalid(format!("{k} must be positive")));
            }
        }
        Ok(())
    }
}

fn read_section(id: ScenarioId, path: &Path) -> Result<toml::Table, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let m: super::Manifest =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if m.scenario != id.as_str() {
            return Err(invalid(format!("manifest is for scenario {}, not {}", m.scenario, id.as_str())));
        }
        let v: toml::Value = serde_json::from_value(m.params).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        return match v {
            toml::Value::Table(t) => Ok(t),
            _ => Err(invalid("manifest params must be a map")),
        };
    }
    let mut doc: toml::Table = toml::from_str(&text).map_err(|e| invalid(format!("{}: {}", path.display(), e.message())))?;
    match doc.remove(id.as_str()) {
        Some(toml::Value::Table(t)) => Ok(t),
        Some(_) => Err(invalid(format!("[{}] must be a table", id.as_str()))),
        None => Err(invalid(format!("{} has no [{}] section", path.display(), id.as_str()))),
    }
}
