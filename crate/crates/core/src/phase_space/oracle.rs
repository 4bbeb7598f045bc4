//! Quadrature versions of the closed-form phase distributions, for
//! validation only.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};

use super::boson::coherent_amplitudes;
use crate::linalg::{spin_coherent_ket, DensityOperator, Operator, C64};
use crate::rng::{normal, stream_rng};

/// Gauss–Legendre nodes and weights on [−1, 1] (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    (x.iter().map(|x| c + h * x).collect(), w.iter().map(|w| h * w).collect())
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 48)
}

/// ∫₀^R r dr ⟨re^{−iφ}|ρ|re^{−iφ}⟩/π with R = 2√n_max + 6.
pub fn phase_dist_boson_quadrature(rho: &DensityOperator, phi: f64, tol: f64) -> f64 {
    let dim = rho.dim();
    let m = rho.matrix();
    let r_max = 2.0 * ((dim - 1) as f64).sqrt() + 6.0;
    let integrand = |r: f64| {
        let v = coherent_amplitudes(C64::from_polar(r, -phi), dim);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                acc += v[i].conj() * m[(i, j)] * v[j];
            }
        }
        r * acc.re / PI
    };
    adaptive_simpson(&integrand, 0.0, r_max, tol)
}

/// ∫₀^π dθ sinθ ⟨θ,φ|ρ|θ,φ⟩/2π by 32-point Gauss–Legendre.
pub fn phase_dist_spin_quadrature(rho: &DensityOperator, phi: f64) -> f64 {
    let (ts, ws) = gauss_legendre_on(32, 0.0, PI);
    ts.iter()
        .zip(&ws)
        .map(|(&t, w)| w * t.sin() * spin_coherent_ket(t, phi).unwrap().sandwich(rho.matrix()).re / TAU)
        .sum()
}

/// Product quadrature of Q(θ_A, φ_AB + φ_B, θ_B, φ_B) = ⟨·|ρ|·⟩/(2π)² over
/// θ_A, θ_B (Gauss–Legendre) and the total phase φ_B (periodic trapezoid).
pub fn phase_diff_dist_spins_quadrature(rho: &DensityOperator, phi_ab: f64) -> f64 {
    let (ts, ws) = gauss_legendre_on(20, 0.0, PI);
    let n_phi = 24;
    let h = TAU / n_phi as f64;
    let mut acc = 0.0;
    for k in 0..n_phi {
        let phi_b = k as f64 * h;
        let phi_a = phi_ab + phi_b;
        for (&ta, wa) in ts.iter().zip(&ws) {
            let ka = spin_coherent_ket(ta, phi_a).unwrap();
            for (&tb, wb) in ts.iter().zip(&ws) {
                let ket = ka.tensor(&spin_coherent_ket(tb, phi_b).unwrap());
                acc += wa * wb * h * ta.sin() * tb.sin() * ket.sandwich(rho.matrix()).re;
            }
        }
    }
    acc / (TAU * TAU)
}

/// Full-rank random state G G†/Tr(G G†) from a complex Ginibre matrix
/// drawn from stream 0 of `seed`.
pub fn random_density(dim: usize, seed: u64) -> DensityOperator {
    let mut rng = stream_rng(seed, 0);
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(normal(&mut rng), normal(&mut rng)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityOperator::new(Operator::from_matrix(herm).expect("square")).expect("Ginibre state is a density operator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let int = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(10) - 2.0 / 11.0).abs() < 1e-14);
        assert!(int(7).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12);
        assert!((v - 0.5 * PI.sqrt()).abs() < 1e-10);
    }
}
