use nalgebra::DMatrix;

use super::{Liouvillian, LindbladError, Rk4};
use crate::linalg::{DensityOperator, Operator, C64};

#[derive(Debug, Clone)]
pub struct MeSample {
    pub t: f64,
    pub rho: DensityOperator,
}

/// Expectation values ⟨O_k⟩(t) on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationSeries {
    pub times: Vec<f64>,
    /// values[k][i] = ⟨O_k⟩ at times[i].
    pub values: Vec<Vec<C64>>,
}

fn check_step(dt: f64, t_final: f64) -> Result<usize, LindbladError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(LindbladError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(LindbladError::InvalidArgument(format!("T must be ≥ 0, got {t_final}")));
    }
    Ok((t_final / dt).round() as usize)
}

fn validated(l: &Liouvillian, x: &DMatrix<C64>, t: f64, dt: f64) -> Result<DensityOperator, LindbladError> {
    let op = Operator::from_matrix(x.clone())?;
    let rho = DensityOperator::new_unchecked(op);
    rho.validate().map_err(|e| LindbladError::StepSize {
        t,
        dt,
        suggested_dt: l.stable_step().min(0.5 * dt),
        cause: e.to_string(),
    })?;
    Ok(rho)
}

/// Fixed-step RK4 integration of dρ/dt = L(ρ), calling `visit` on every
/// `sample_every`-th step (and at t = 0). Every visited state is checked
/// against the density-operator invariants.
pub fn evolve_me_with<F>(
    l: &Liouvillian,
    rho0: &DensityOperator,
    dt: f64,
    t_final: f64,
    sample_every: usize,
    mut visit: F,
) -> Result<(), LindbladError>
where
    F: FnMut(f64, &DensityOperator) -> Result<(), LindbladError>,
{
    if rho0.dim() != l.dim() {
        return Err(LindbladError::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    let n = check_step(dt, t_final)?;
    let every = sample_every.max(1);
    let mut x = rho0.matrix().clone();
    let mut rk = Rk4::new(l.dim());
    visit(0.0, &validated(l, &x, 0.0, dt)?)?;
    for step in 1..=n {
        rk.step(l, &mut x, dt);
        if step % every == 0 {
            let t = step as f64 * dt;
            if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(LindbladError::StepSize {
                    t,
                    dt,
                    suggested_dt: l.stable_step().min(0.5 * dt),
                    cause: "non-finite state".into(),
                });
            }
            visit(t, &validated(l, &x, t, dt)?)?;
        }
    }
    Ok(())
}

/// Samples of ρ(t) every `sample_every` steps.
pub fn evolve_me(
    l: &Liouvillian,
    rho0: &DensityOperator,
    dt: f64,
    t_final: f64,
    sample_every: usize,
) -> Result<Vec<MeSample>, LindbladError> {
    let mut out = Vec::new();
    evolve_me_with(l, rho0, dt, t_final, sample_every, |t, rho| {
        out.push(MeSample { t, rho: rho.clone() });
        Ok(())
    })?;
    Ok(out)
}

/// ⟨O_k⟩(t) = Tr[O_k ρ(t)] every `sample_every` steps.
pub fn evolve_expectations(
    l: &Liouvillian,
    rho0: &DensityOperator,
    dt: f64,
    t_final: f64,
    sample_every: usize,
    ops: &[Operator],
) -> Result<ExpectationSeries, LindbladError> {
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); ops.len()];
    evolve_me_with(l, rho0, dt, t_final, sample_every, |t, rho| {
        times.push(t);
        for (v, op) in values.iter_mut().zip(ops) {
            v.push(rho.expect(op));
        }
        Ok(())
    })?;
    Ok(ExpectationSeries { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_qvdp_model, build_spin_model, QvdpParams, SpinParams};
    use crate::linalg::{coherent_ket, fock_operators, pauli_operators, spin_coherent_ket, Ket};

    #[test]
    fn spin_coherence_decays_analytically() {
        let p = SpinParams { omega: 2.0, gamma_plus: 0.5, gamma_minus: 1.0 };
        let l = Liouvillian::new(&build_spin_model(&p).unwrap());
        let rho0 = DensityOperator::from_ket(&spin_coherent_ket(1.0, 0.4).unwrap());
        let sp = pauli_operators().sp;
        let series = evolve_expectations(&l, &rho0, 1e-3, 5.0, 100, &[sp]).unwrap();
        let s0 = series.values[0][0];
        for (t, v) in series.times.iter().zip(&series.values[0]) {
            let exact = s0 * C64::new(-0.5 * (p.gamma_plus + p.gamma_minus) * t, p.omega * t).exp();
            assert!((v - exact).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn pure_hamiltonian_conserves_number() {
        let p = QvdpParams { omega: 1.5, kappa1: 0.0, kappa2: 0.0, kappa: 0.0 };
        let l = Liouvillian::new(&build_qvdp_model(&p, 12).unwrap());
        let rho0 = DensityOperator::from_ket(&coherent_ket(C64::new(1.0, 0.5), 12).unwrap().ket);
        let n = fock_operators(12).unwrap().n;
        let s = evolve_expectations(&l, &rho0, 1e-3, 3.0, 100, &[n]).unwrap();
        let n0 = s.values[0][0].re;
        assert!(s.values[0].iter().all(|v| (v.re - n0).abs() < 1e-10));
    }

    #[test]
    fn trace_stays_unit() {
        let p = QvdpParams { omega: 4.0, kappa1: 4.0, kappa2: 0.5, kappa: 1.0 };
        let l = Liouvillian::new(&build_qvdp_model(&p, 15).unwrap());
        let rho0 = DensityOperator::from_ket(&Ket::basis(16, 1));
        let samples = evolve_me(&l, &rho0, 2e-3, 1.0, 50).unwrap();
        assert!(samples.iter().all(|s| (s.rho.matrix().trace().re - 1.0).abs() < 1e-9));
    }

    #[test]
    fn unstable_step_reports_diagnostic() {
        let p = QvdpParams { omega: 4.0, kappa1: 4.0, kappa2: 0.5, kappa: 1.0 };
        let l = Liouvillian::new(&build_qvdp_model(&p, 15).unwrap());
        let rho0 = DensityOperator::from_ket(&Ket::basis(16, 1));
        let err = evolve_me(&l, &rho0, 0.5, 20.0, 1).unwrap_err();
        match err {
            LindbladError::StepSize { suggested_dt, .. } => assert!(suggested_dt < 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
