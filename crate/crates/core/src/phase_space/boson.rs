use rayon::prelude::*;

use super::{coherent_validity_radius, PhaseDistribution, PhaseFourier, PhaseGrid, PhaseSpaceError, QSurface, SurfaceAxes};
use crate::linalg::{ln_factorial, DensityOperator, C64};

/// e^{−|α|²/2} αⁿ/√n! for n ≤ n_max, without renormalization, so that
/// ⟨α|ρ|α⟩ is the exact overlap of a truncated ρ with the true |α⟩.
pub(crate) fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    let (ln_r, arg) = (alpha.norm().ln(), alpha.arg());
    (0..dim)
        .map(|n| {
            let ln_mag = -0.5 * r2 + n as f64 * ln_r - 0.5 * ln_factorial(n);
            C64::from_polar(ln_mag.exp(), n as f64 * arg)
        })
        .collect()
}

/// Γ((n+m)/2 + 1)/√(n! m!), evaluated in log space.
pub(crate) fn radial_coefficient(n: usize, m: usize) -> f64 {
    let g = statrs::function::gamma::ln_gamma(0.5 * (n + m) as f64 + 1.0);
    (g - 0.5 * (ln_factorial(n) + ln_factorial(m))).exp()
}

fn sandwich(rho: &DensityOperator, v: &[C64]) -> f64 {
    let m = rho.matrix();
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..n {
            col += v[i].conj() * m[(i, j)];
        }
        acc += col * v[j];
    }
    acc.re
}

/// Q(α) = ⟨α|ρ|α⟩/π on the grid α = x + ip of a single mode.
pub fn husimi_q_boson(rho: &DensityOperator, xs: &[f64], ps: &[f64]) -> Result<QSurface, PhaseSpaceError> {
    if xs.is_empty() || ps.is_empty() || xs.iter().chain(ps).any(|v| !v.is_finite()) {
        return Err(PhaseSpaceError::BadGrid);
    }
    let dim = rho.dim();
    if dim < 2 {
        return Err(PhaseSpaceError::WrongDimension { expected: "single bosonic mode", found: dim });
    }
    let limit = coherent_validity_radius(dim - 1);
    let mut warning = false;
    for &x in xs {
        for &p in ps {
            warning |= x.hypot(p) > limit;
        }
    }
    let values: Vec<f64> = xs
        .par_iter()
        .flat_map_iter(|&x| {
            ps.iter()
                .map(move |&p| sandwich(rho, &coherent_amplitudes(C64::new(x, p), dim)) / std::f64::consts::PI)
        })
        .collect();
    Ok(QSurface {
        axes: SurfaceAxes::Plane { xs: xs.to_vec(), ps: ps.to_vec() },
        values,
        truncation_warning: warning,
    })
}

/// Fourier coefficients of Q(φ) = ∫ r dr Q(r e^{−iφ}) for one mode:
/// c_k = Σ_m ρ_{m+k,m} Γ((2m+k)/2 + 1)/√((m+k)! m!).
pub fn phase_fourier_boson(rho: &DensityOperator) -> Result<PhaseFourier, PhaseSpaceError> {
    let dim = rho.dim();
    if dim < 2 {
        return Err(PhaseSpaceError::WrongDimension { expected: "single bosonic mode", found: dim });
    }
    let m = rho.matrix();
    let coeffs = (0..dim)
        .map(|k| {
            (0..dim - k).fold(C64::new(0.0, 0.0), |acc, j| acc + m[(j + k, j)] * radial_coefficient(j + k, j))
        })
        .collect();
    Ok(PhaseFourier { coeffs })
}

pub fn phase_dist_boson(rho: &DensityOperator, grid: &PhaseGrid) -> Result<PhaseDistribution, PhaseSpaceError> {
    Ok(phase_fourier_boson(rho)?.on_grid(grid))
}

fn mode_dim(dim: usize) -> Result<usize, PhaseSpaceError> {
    let d = (dim as f64).sqrt().round() as usize;
    if d < 2 || d * d != dim {
        return Err(PhaseSpaceError::WrongDimension { expected: "two equal bosonic modes", found: dim });
    }
    Ok(d)
}

/// Fourier coefficients of Q(φ_AB), φ_AB = φ_A − φ_B, for two modes of
/// equal truncation: only index pairs with n_A − m_A = −(n_B − m_B) = k
/// survive the integral over the total phase.
pub fn phase_diff_fourier_boson(rho: &DensityOperator) -> Result<PhaseFourier, PhaseSpaceError> {
    let d = mode_dim(rho.dim())?;
    let m = rho.matrix();
    let mut coeffs = vec![C64::new(0.0, 0.0); d];
    for (k, ck) in coeffs.iter_mut().enumerate() {
        for ma in 0..d - k {
            let na = ma + k;
            let ca = radial_coefficient(na, ma);
            for nb in 0..d - k {
                let mb = nb + k;
                *ck += m[(na * d + nb, ma * d + mb)] * (ca * radial_coefficient(nb, mb));
            }
        }
    }
    Ok(PhaseFourier { coeffs })
}

pub fn phase_diff_dist_boson(rho: &DensityOperator, grid: &PhaseGrid) -> Result<PhaseDistribution, PhaseSpaceError> {
    Ok(phase_diff_fourier_boson(rho)?.on_grid(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{coherent_ket, fock_operators, tensor, Operator};
    use crate::phase_space::oracle::{phase_dist_boson_quadrature, random_density};
    use proptest::prelude::*;

    #[test]
    fn coherent_state_q_is_gaussian() {
        let beta = C64::new(0.8, -0.5);
        let rho = DensityOperator::from_ket(&coherent_ket(beta, 40).unwrap().ket);
        let xs: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
        let q = husimi_q_boson(&rho, &xs, &xs).unwrap();
        assert!(!q.truncation_warning);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &p) in xs.iter().enumerate() {
                let exact = (-(C64::new(x, p) - beta).norm_sqr()).exp() / std::f64::consts::PI;
                assert!((q.get(i, j) - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn vacuum_and_fock_diagonal() {
        let rho = DensityOperator::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let q = husimi_q_boson(&rho, &[0.0], &[0.0]).unwrap();
        assert!((q.values[0] - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        let rho = DensityOperator::diagonal(&[0.2, 0.5, 0.3]).unwrap();
        let d = phase_dist_boson(&rho, &PhaseGrid::new(16).unwrap()).unwrap();
        assert!(d.max_deviation_from_flat() < 1e-15);
    }

    #[test]
    fn closed_form_matches_radial_quadrature() {
        let rho = random_density(5, 11);
        let f = phase_fourier_boson(&rho).unwrap();
        for phi in [0.0, 0.7, 2.1, 4.0] {
            let q = phase_dist_boson_quadrature(&rho, phi, 1e-11);
            assert!((f.eval(phi) - q).abs() < 1e-6, "φ={phi}");
        }
    }

    #[test]
    fn coherent_phase_peaks_at_minus_arg() {
        let beta = C64::from_polar(2.0, -1.0);
        let rho = DensityOperator::from_ket(&coherent_ket(beta, 30).unwrap().ket);
        let d = phase_dist_boson(&rho, &PhaseGrid::new(200).unwrap()).unwrap();
        assert!((d.argmax_phi() - 1.0).abs() < 0.04);
    }

    #[test]
    fn product_of_symmetric_states_is_flat() {
        let a = DensityOperator::diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let b = DensityOperator::diagonal(&[0.1, 0.6, 0.3]).unwrap();
        let ab = DensityOperator::new(tensor(a.operator(), b.operator())).unwrap();
        let d = phase_diff_dist_boson(&ab, &PhaseGrid::new(32).unwrap()).unwrap();
        assert!(d.max_deviation_from_flat() < 1e-15);
    }

    #[test]
    fn two_coherent_modes_peak_at_phase_difference() {
        let (pa, pb) = (0.9, -0.6);
        let ka = coherent_ket(C64::from_polar(1.5, -pa), 14).unwrap().ket;
        let kb = coherent_ket(C64::from_polar(1.5, -pb), 14).unwrap().ket;
        let rho = DensityOperator::from_ket(&ka.tensor(&kb));
        let d = phase_diff_dist_boson(&rho, &PhaseGrid::new(360).unwrap()).unwrap();
        assert!((d.argmax_phi() - (pa - pb)).abs() < 0.02);
        assert!((d.integral() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn rotation_shifts_phase_distribution(seed in 0u64..1000, shift in 0usize..32) {
            let grid = PhaseGrid::new(32).unwrap();
            let theta = shift as f64 * grid.spacing();
            let rho = random_density(6, seed);
            let n = fock_operators(5).unwrap().n;
            // U = e^{iθ a†a}
            let u = Operator::from_matrix(nalgebra::DMatrix::from_fn(6, 6, |i, j| {
                if i == j { C64::from_polar(1.0, theta * n.get(i, i).re) } else { C64::new(0.0, 0.0) }
            })).unwrap();
            let rotated = DensityOperator::new(&(&u * rho.operator()) * &u.adjoint()).unwrap();
            let before = phase_dist_boson(&rho, &grid).unwrap();
            let after = phase_dist_boson(&rotated, &grid).unwrap();
            for i in 0..32 {
                // Q_rot(φ) = Q(φ + θ)
                prop_assert!((after.values[i] - before.values[(i + shift) % 32]).abs() < 1e-12);
            }
            prop_assert!((before.integral() - 1.0).abs() < 1e-10);
            prop_assert!(before.min_value() > -1e-10);
        }
    }
}
