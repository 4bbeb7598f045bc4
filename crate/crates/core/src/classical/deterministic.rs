//! Noiseless fourth-order Runge–Kutta paths, used as reference solutions
//! and for the full two-amplitude model.

use serde::{Deserialize, Serialize};

use super::{ClassicalError, TrajectoryRecord, TrajectoryValues, VdpParams};
use crate::linalg::C64;

fn vdp_rhs(p: &VdpParams, a: C64) -> C64 {
    a * (C64::new(0.5 * p.kappa1, -p.omega) - p.kappa2 * a.norm_sqr())
}

/// α(T) of the noiseless van-der-Pol oscillator by fixed-step RK4.
pub fn integrate_vdp_rk4(p: &VdpParams, alpha0: C64, dt: f64, t_final: f64) -> C64 {
    let n = (t_final / dt).round() as usize;
    let mut a = alpha0;
    for _ in 0..n {
        let k1 = vdp_rhs(p, a);
        let k2 = vdp_rhs(p, a + k1 * (0.5 * dt));
        let k3 = vdp_rhs(p, a + k2 * (0.5 * dt));
        let k4 = vdp_rhs(p, a + k3 * dt);
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    a
}

/// Two dissipatively coupled, detuned van-der-Pol amplitudes in the frame
/// rotating at their mean frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledVdpParams {
    pub delta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

fn coupled_rhs(p: &CoupledVdpParams, s: [C64; 2]) -> [C64; 2] {
    let [a, b] = s;
    let da = a * (C64::new(0.5 * p.kappa1, -0.5 * p.delta) - p.kappa2 * a.norm_sqr()) + (b - a) * (0.5 * p.v);
    let db = b * (C64::new(0.5 * p.kappa1, 0.5 * p.delta) - p.kappa2 * b.norm_sqr()) + (a - b) * (0.5 * p.v);
    [da, db]
}

/// RK4 integration of the coupled amplitude equations, sampling every
/// `sample_every` steps.
pub fn integrate_coupled_vdp(
    p: &CoupledVdpParams,
    init: [C64; 2],
    dt: f64,
    t_final: f64,
    sample_every: usize,
) -> Result<TrajectoryRecord, ClassicalError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(ClassicalError::NonPositiveStep(dt));
    }
    if !t_final.is_finite() || t_final <= 0.0 {
        return Err(ClassicalError::NonPositiveDuration(t_final));
    }
    if p.v < 0.0 || p.kappa1 <= 0.0 || p.kappa2 <= 0.0 {
        return Err(ClassicalError::InvalidParams("need V ≥ 0 and positive κ₁, κ₂".into()));
    }
    let every = sample_every.max(1);
    let n = (t_final / dt).round().max(1.0) as usize;
    let add = |s: [C64; 2], k: [C64; 2], h: f64| [s[0] + k[0] * h, s[1] + k[1] * h];
    let mut s = init;
    let mut out = vec![s];
    for step in 1..=n {
        let k1 = coupled_rhs(p, s);
        let k2 = coupled_rhs(p, add(s, k1, 0.5 * dt));
        let k3 = coupled_rhs(p, add(s, k2, 0.5 * dt));
        let k4 = coupled_rhs(p, add(s, k3, dt));
        for i in 0..2 {
            s[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
        if step % every == 0 {
            out.push(s);
        }
    }
    let h = dt * every as f64;
    Ok(TrajectoryRecord {
        seed: 0,
        stream: 0,
        dt,
        sample_dt: h,
        times: (0..out.len()).map(|k| k as f64 * h).collect(),
        values: TrajectoryValues::AmplitudePair(out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::PhaseSource;

    #[test]
    fn rk4_reaches_limit_cycle() {
        let p = VdpParams { kappa1: 2.0, kappa2: 1.0, omega: 4.0, sigma2: 0.0 };
        let a = integrate_vdp_rk4(&p, C64::new(0.05, 0.0), 1e-3, 30.0);
        assert!((a.norm() - p.r0()).abs() < 1e-9);
    }

    #[test]
    fn strong_coupling_locks_amplitude_phases() {
        // large κ: radius ≈ r₀ and the amplitude model reduces to the Adler equation
        let p = CoupledVdpParams { delta: 0.5, v: 1.0, kappa1: 40.0, kappa2: 40.0 };
        let rec = integrate_coupled_vdp(&p, [C64::new(0.7, 0.0), C64::new(0.0, 0.7)], 1e-3, 40.0, 100).unwrap();
        let d = rec.phase_series(PhaseSource::Difference).unwrap();
        let last = *d.last().unwrap();
        assert!((last - (0.5_f64).asin()).abs() < 0.02, "φ_AB = {last}");
    }
}
