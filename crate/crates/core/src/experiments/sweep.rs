//! (δ, V) grids of the maximum of the stationary phase-difference
//! distribution for the two-oscillator scenarios.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::classical::classical_max_density;
use super::quantum::qvdp_two_max_q;
use super::spin::spin_two_max_q;
use super::{linspace, Column, ExperimentError, Manifest, ManifestBuilder, ScenarioConfig, ScenarioParams, Table};
use crate::classical::{CoupledPhaseParams, IntegrationSpec};
use crate::rng::stream_seed;

const SWEEP_N_PHI: usize = 128;

/// `lo:hi:n`, n points from lo to hi inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }
}

impl FromStr for SweepAxis {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExperimentError::InvalidConfig(format!("axis {s:?} is not lo:hi:n"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !lo.is_finite() || !hi.is_finite() || n == 0 {
            return Err(bad());
        }
        Ok(Self { lo, hi, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    /// NaN when the point failed.
    pub max_value: f64,
    pub warning: Option<String>,
    pub error: Option<String>,
}

fn set_axes(params: &mut ScenarioParams, delta: Option<SweepAxis>, v: Option<SweepAxis>) -> Result<(), ExperimentError> {
    macro_rules! apply {
        ($p:expr) => {{
            if let Some(d) = delta {
                $p.sweep_delta = [d.lo, d.hi];
                $p.sweep_n_delta = d.n;
            }
            if let Some(v) = v {
                $p.sweep_v = [v.lo, v.hi];
                $p.sweep_n_v = v.n;
            }
            (
                SweepAxis { lo: $p.sweep_delta[0], hi: $p.sweep_delta[1], n: $p.sweep_n_delta },
                SweepAxis { lo: $p.sweep_v[0], hi: $p.sweep_v[1], n: $p.sweep_n_v },
            )
        }};
    }
    match params {
        ScenarioParams::ClassicalTwo(p) => apply!(p),
        ScenarioParams::QvdpTwo(p) => apply!(p),
        ScenarioParams::SpinTwo(p) => apply!(p),
        _ => return Err(ExperimentError::NoSweep(String::new())),
    };
    Ok(())
}

fn axes(params: &ScenarioParams) -> (SweepAxis, SweepAxis) {
    macro_rules! get {
        ($p:expr) => {
            (
                SweepAxis { lo: $p.sweep_delta[0], hi: $p.sweep_delta[1], n: $p.sweep_n_delta },
                SweepAxis { lo: $p.sweep_v[0], hi: $p.sweep_v[1], n: $p.sweep_n_v },
            )
        };
    }
    match params {
        ScenarioParams::ClassicalTwo(p) => get!(p),
        ScenarioParams::QvdpTwo(p) => get!(p),
        ScenarioParams::SpinTwo(p) => get!(p),
        _ => unreachable!("checked by set_axes"),
    }
}

fn evaluate(params: &ScenarioParams, index: u64, delta: f64, v: f64) -> SweepPoint {
    let result: Result<(f64, Option<String>), ExperimentError> = match params {
        ScenarioParams::ClassicalTwo(p) => {
            let cp = CoupledPhaseParams { delta, v, sigma2: p.sweep_sigma2_per_delta * delta.abs() };
            let spec = IntegrationSpec::new(p.dt, p.sweep_t_final, p.sweep_n_traj, stream_seed(p.seed, index))
                .with_sample_every(p.sample_every);
            classical_max_density(&cp, &spec, p.t_min, p.phase_bins).map(|m| (m, None))
        }
        ScenarioParams::QvdpTwo(p) => qvdp_two_max_q(p, delta, v, p.sweep_n_max, SWEEP_N_PHI)
            .map(|(m, w)| (m, w.then(|| format!("Fock truncation flagged at n_max = {}", p.sweep_n_max)))),
        ScenarioParams::SpinTwo(p) => spin_two_max_q(p, delta, v, SWEEP_N_PHI).map(|m| (m, None)),
        _ => unreachable!("checked by set_axes"),
    };
    match result {
        Ok((max_value, warning)) => SweepPoint { delta, v, max_value, warning, error: None },
        Err(e) => SweepPoint { delta, v, max_value: f64::NAN, warning: None, error: Some(e.to_string()) },
    }
}

/// Evaluates every (δ, V) point of the grid in parallel. Axes given here
/// replace the config's sweep axes and are recorded in the manifest.
pub fn run_sweep(
    config: &ScenarioConfig,
    delta: Option<SweepAxis>,
    v: Option<SweepAxis>,
    out_dir: &Path,
    strict: bool,
) -> Result<(Manifest, Vec<SweepPoint>), ExperimentError> {
    let mut cfg = config.clone();
    set_axes(&mut cfg.params, delta, v).map_err(|_| ExperimentError::NoSweep(cfg.id.as_str().into()))?;
    cfg.validate()?;
    let (da, va) = axes(&cfg.params);
    let grid: Vec<(f64, f64)> = da.values().into_iter().flat_map(|d| va.values().into_iter().map(move |v| (d, v))).collect();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(d, v))| evaluate(&cfg.params, i as u64, d, v))
        .collect();

    if strict {
        if let Some(p) = points.iter().find(|p| p.error.is_some() || p.warning.is_some()) {
            let msg = p.error.as_ref().or(p.warning.as_ref()).cloned().unwrap_or_default();
            return Err(ExperimentError::Strict(format!("sweep point (delta = {}, V = {}): {msg}", p.delta, p.v)));
        }
    }

    let mut out = ManifestBuilder::create(out_dir)?;
    let unit = match &cfg.params {
        ScenarioParams::ClassicalTwo(p) => p.unit.clone(),
        ScenarioParams::QvdpTwo(p) => p.unit.clone(),
        ScenarioParams::SpinTwo(p) => p.unit.clone(),
        _ => unreachable!(),
    };
    let mut t = Table::new(vec![
        Column::new("delta", &unit),
        Column::new("V", &unit),
        Column::new("max_P", "1/rad"),
        Column::new("warning", ""),
        Column::new("error", ""),
    ]);
    for p in &points {
        t.push(vec![p.delta, p.v, p.max_value, p.warning.is_some() as u8 as f64, p.error.is_some() as u8 as f64]);
    }
    let issues: Vec<&SweepPoint> = points.iter().filter(|p| p.warning.is_some() || p.error.is_some()).collect();
    out.write_table(
        "sweep",
        &t,
        json!({
            "delta_axis": da,
            "V_axis": va,
            "flat_value": 1.0 / std::f64::consts::TAU,
            "issues": issues,
        }),
    )?;
    let manifest = out.finish(cfg.id.as_str(), cfg.params_json(), cfg.seed())?;
    Ok((manifest, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ScenarioId;

    #[test]
    fn axis_parsing() {
        let a: SweepAxis = "-2:2:5".parse().unwrap();
        assert_eq!(a.values(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!("1:2".parse::<SweepAxis>().is_err());
        assert!("1:2:0".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn spin_sweep_small_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::preset(ScenarioId::SpinTwo);
        let (m, pts) = run_sweep(&cfg, Some("0:1:2".parse().unwrap()), Some("0:2:2".parse().unwrap()), dir.path(), true).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| p.max_value >= 1.0 / std::f64::consts::TAU - 1e-12));
        assert_eq!(m.params["sweep_n_V"], 2);
    }

    #[test]
    fn single_oscillator_has_no_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::preset(ScenarioId::SpinLc);
        assert!(matches!(run_sweep(&cfg, None, None, dir.path(), false), Err(ExperimentError::NoSweep(_))));
    }
}
