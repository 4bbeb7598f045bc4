use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassicalError, CoupledPhaseParams, IntegrationSpec, TrajectoryRecord, TrajectoryValues, VdpParams};
use crate::linalg::C64;
use crate::rng::{normal, stream_rng};

/// How each trajectory chooses its initial phase(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPhases {
    /// Use the given initial condition for every trajectory.
    #[default]
    Fixed,
    /// Rotate the initial condition by an independent uniform phase per
    /// trajectory (per oscillator for phase pairs).
    Uniform,
}

/// Euler–Maruyama ensemble of the noisy van-der-Pol oscillator. The linear
/// rotation e^{−iωdt} is exact, so σ² = 0 keeps the radius fixed point r₀.
pub fn simulate_vdp(
    params: &VdpParams,
    alpha0: C64,
    spec: &IntegrationSpec,
    init: InitialPhases,
) -> Result<Vec<TrajectoryRecord>, ClassicalError> {
    params.validate()?;
    spec.validate()?;
    if !(alpha0.re.is_finite() && alpha0.im.is_finite()) {
        return Err(ClassicalError::NonFinite("initial amplitude"));
    }
    let p = *params;
    let spec = *spec;
    let times = spec.sample_times();
    let n_steps = spec.n_steps();
    let every = spec.sample_every.max(1);
    let sigma_sqrt_dt = (p.sigma2 * spec.dt).sqrt();
    // the free rotation is applied exactly, the rest by Euler–Maruyama
    let rotation = C64::from_polar(1.0, -p.omega * spec.dt);

    let records = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, i);
            let mut alpha = match init {
                InitialPhases::Fixed => alpha0,
                InitialPhases::Uniform => {
                    let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    alpha0 * C64::from_polar(1.0, -theta)
                }
            };
            let mut out = Vec::with_capacity(times.len());
            out.push(alpha);
            for step in 1..=n_steps {
                let drift = alpha * (0.5 * p.kappa1 - p.kappa2 * alpha.norm_sqr());
                let (wx, wy) = if sigma_sqrt_dt > 0.0 {
                    (normal(&mut rng), normal(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                alpha = (alpha + drift * spec.dt) * rotation + C64::new(wx, wy) * sigma_sqrt_dt;
                if step % every == 0 {
                    out.push(alpha);
                }
            }
            TrajectoryRecord {
                seed: spec.seed,
                stream: i,
                dt: spec.dt,
                sample_dt: spec.sample_interval(),
                times: times.clone(),
                values: TrajectoryValues::Amplitude(out),
            }
        })
        .collect();
    Ok(records)
}

/// Euler–Maruyama ensemble of the noisy two-oscillator phase equations.
/// Phases are accumulated without wrapping.
pub fn simulate_coupled_phases(
    params: &CoupledPhaseParams,
    phi0: [f64; 2],
    spec: &IntegrationSpec,
    init: InitialPhases,
) -> Result<Vec<TrajectoryRecord>, ClassicalError> {
    params.validate()?;
    spec.validate()?;
    if !(phi0[0].is_finite() && phi0[1].is_finite()) {
        return Err(ClassicalError::NonFinite("initial phase"));
    }
    let p = *params;
    let spec = *spec;
    let times = spec.sample_times();
    let n_steps = spec.n_steps();
    let every = spec.sample_every.max(1);
    let noise = (0.5 * p.sigma2 * spec.dt).sqrt();
    let dt = spec.dt;

    let records = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, i);
            let (mut a, mut b) = match init {
                InitialPhases::Fixed => (phi0[0], phi0[1]),
                InitialPhases::Uniform => {
                    let ta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    let tb: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    (phi0[0] + ta, phi0[1] + tb)
                }
            };
            let mut out = Vec::with_capacity(times.len());
            out.push([a, b]);
            for step in 1..=n_steps {
                let s = (b - a).sin();
                let (na, nb) = if noise > 0.0 {
                    (normal(&mut rng), normal(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                let da = (0.5 * p.delta + 0.5 * p.v * s) * dt + noise * na;
                let db = (-0.5 * p.delta - 0.5 * p.v * s) * dt + noise * nb;
                a += da;
                b += db;
                if step % every == 0 {
                    out.push([a, b]);
                }
            }
            TrajectoryRecord {
                seed: spec.seed,
                stream: i,
                dt,
                sample_dt: spec.sample_interval(),
                times: times.clone(),
                values: TrajectoryValues::PhasePair(out),
            }
        })
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::integrate_vdp_rk4;

    fn amp(r: &TrajectoryRecord) -> &[C64] {
        match &r.values {
            TrajectoryValues::Amplitude(a) => a,
            _ => panic!("expected amplitudes"),
        }
    }

    #[test]
    fn noiseless_limit_cycle_stays_on_radius() {
        let p = VdpParams { kappa1: 1.0, kappa2: 1.0, omega: 2.0, sigma2: 0.0 };
        let spec = IntegrationSpec::new(1e-3, 20.0, 1, 0);
        let tr = simulate_vdp(&p, C64::new(p.r0(), 0.0), &spec, InitialPhases::Fixed).unwrap();
        for z in amp(&tr[0]) {
            assert!((z.norm() - p.r0()).abs() < 1e-3 * p.r0());
        }
    }

    #[test]
    fn euler_error_halves_with_step() {
        let p = VdpParams { kappa1: 1.0, kappa2: 0.5, omega: 3.0, sigma2: 0.0 };
        let a0 = C64::new(0.3, 0.2);
        let reference = integrate_vdp_rk4(&p, a0, 1e-4, 2.0);
        let err = |dt: f64| {
            let spec = IntegrationSpec::new(dt, 2.0, 1, 0);
            let tr = simulate_vdp(&p, a0, &spec, InitialPhases::Fixed).unwrap();
            (amp(&tr[0]).last().unwrap() - reference).norm()
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        let ratio = e1 / e2;
        assert!(ratio > 1.7 && ratio < 2.3, "ratio {ratio}");
    }

    #[test]
    fn decoupled_phases_drift_linearly() {
        let p = CoupledPhaseParams { delta: 0.7, v: 0.0, sigma2: 0.0 };
        let spec = IntegrationSpec::new(1e-2, 10.0, 1, 0);
        let tr = simulate_coupled_phases(&p, [0.1, -0.2], &spec, InitialPhases::Fixed).unwrap();
        let d = tr[0].phase_series(crate::classical::PhaseSource::Difference).unwrap();
        let last = *d.last().unwrap();
        assert!((last - (0.3 + 0.7 * 10.0)).abs() < 1e-10);
    }

    #[test]
    fn ensembles_are_reproducible() {
        let p = CoupledPhaseParams { delta: 1.0, v: 0.5, sigma2: 1.0 };
        let spec = IntegrationSpec::new(1e-2, 1.0, 4, 99);
        let a = simulate_coupled_phases(&p, [0.0, 0.0], &spec, InitialPhases::Uniform).unwrap();
        let b = simulate_coupled_phases(&p, [0.0, 0.0], &spec, InitialPhases::Uniform).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].values, a[1].values);
    }
}
