use std::f64::consts::{PI, TAU};

use super::{PhaseDistribution, PhaseFourier, PhaseGrid, PhaseSpaceError, QSurface, SurfaceAxes};
use crate::linalg::{spin_coherent_ket, DensityOperator, C64};

fn check_dim(rho: &DensityOperator, dim: usize, expected: &'static str) -> Result<(), PhaseSpaceError> {
    if rho.dim() != dim {
        return Err(PhaseSpaceError::WrongDimension { expected, found: rho.dim() });
    }
    Ok(())
}

/// Q(θ, φ) = ⟨θ,φ|ρ|θ,φ⟩/2π, row-major over (θ, φ).
pub fn husimi_q_spin(rho: &DensityOperator, thetas: &[f64], phis: &[f64]) -> Result<QSurface, PhaseSpaceError> {
    check_dim(rho, 2, "single spin")?;
    if thetas.is_empty() || phis.is_empty() {
        return Err(PhaseSpaceError::BadGrid);
    }
    let mut values = Vec::with_capacity(thetas.len() * phis.len());
    for &t in thetas {
        for &p in phis {
            let ket = spin_coherent_ket(t, p)?;
            values.push(ket.sandwich(rho.matrix()).re / TAU);
        }
    }
    Ok(QSurface {
        axes: SurfaceAxes::Sphere { thetas: thetas.to_vec(), phis: phis.to_vec() },
        values,
        truncation_warning: false,
    })
}

/// Q(φ) = 1/2π + ¼ Re[⟨σ⁺⟩ e^{−iφ}].
pub fn phase_fourier_spin(rho: &DensityOperator) -> Result<PhaseFourier, PhaseSpaceError> {
    check_dim(rho, 2, "single spin")?;
    // ⟨σ⁺⟩ = ρ₀₁
    let sp = rho.matrix()[(0, 1)];
    Ok(PhaseFourier {
        coeffs: vec![C64::new(1.0, 0.0), sp.conj() * (PI / 4.0)],
    })
}

pub fn phase_dist_spin(rho: &DensityOperator, grid: &PhaseGrid) -> Result<PhaseDistribution, PhaseSpaceError> {
    Ok(phase_fourier_spin(rho)?.on_grid(grid))
}

/// Q(φ_AB) = 1/2π + (π/16) Re[⟨σ⁺_A σ⁻_B⟩ e^{−iφ_AB}].
pub fn phase_diff_fourier_spins(rho: &DensityOperator) -> Result<PhaseFourier, PhaseSpaceError> {
    check_dim(rho, 4, "two spins")?;
    // ⟨σ⁺_A σ⁻_B⟩ = ⟨0_A 1_B|ρ|1_A 0_B⟩, basis index = 2·s_A + s_B
    let c = rho.matrix()[(1, 2)];
    Ok(PhaseFourier {
        coeffs: vec![C64::new(1.0, 0.0), c.conj() * (PI * PI / 16.0)],
    })
}

pub fn phase_diff_dist_spins(rho: &DensityOperator, grid: &PhaseGrid) -> Result<PhaseDistribution, PhaseSpaceError> {
    Ok(phase_diff_fourier_spins(rho)?.on_grid(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_operators, tensor, Ket};
    use crate::phase_space::oracle::{phase_diff_dist_spins_quadrature, phase_dist_spin_quadrature, random_density};

    #[test]
    fn mixed_state_is_uniform_on_sphere() {
        let rho = DensityOperator::maximally_mixed(2);
        let thetas: Vec<f64> = (0..=20).map(|i| PI * i as f64 / 20.0).collect();
        let phis: Vec<f64> = (0..40).map(|i| TAU * i as f64 / 40.0).collect();
        let q = husimi_q_spin(&rho, &thetas, &phis).unwrap();
        assert!(q.values.iter().all(|v| (v - 1.0 / (4.0 * PI)).abs() < 1e-15));
        assert!((q.integral() - 1.0).abs() < 0.02);
    }

    #[test]
    fn closed_form_matches_theta_quadrature() {
        for seed in 0..5 {
            let rho = random_density(2, seed);
            let f = phase_fourier_spin(&rho).unwrap();
            for phi in [0.0, 1.0, 3.3, 5.9] {
                assert!((f.eval(phi) - phase_dist_spin_quadrature(&rho, phi)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_coherence_gives_extreme_deviation() {
        // (|01⟩ − |10⟩)/√2 has ⟨σ⁺_A σ⁻_B⟩ = −1/2
        let s = 0.5f64.sqrt();
        let ket = Ket::from_amplitudes(vec![C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let rho = DensityOperator::from_ket(&ket);
        let p = pauli_operators();
        let c = rho.expect(&tensor(&p.sp, &p.sm));
        assert!((c.re + 0.5).abs() < 1e-15);
        let d = phase_diff_dist_spins(&rho, &PhaseGrid::new(64).unwrap()).unwrap();
        assert!((d.max_deviation_from_flat() - PI / 32.0).abs() < 1e-12);
        assert!((d.argmax_phi() - PI).abs() < 1e-12);
    }

    #[test]
    fn two_spin_closed_form_matches_quadrature() {
        let rho = random_density(4, 3);
        let f = phase_diff_fourier_spins(&rho).unwrap();
        for phi in [0.3, 2.0, 4.4] {
            assert!((f.eval(phi) - phase_diff_dist_spins_quadrature(&rho, phi)).abs() < 1e-10);
        }
    }
}
