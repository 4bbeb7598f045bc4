use nalgebra::DMatrix;

use super::{ln_factorial, Ket, LinalgError, Operator, C64};

/// Ladder and number operators of one truncated bosonic mode.
#[derive(Debug, Clone)]
pub struct FockOperators {
    pub a: Operator,
    pub a_dag: Operator,
    pub n: Operator,
}

impl FockOperators {
    pub fn n_max(&self) -> usize {
        self.a.dim() - 1
    }
}

/// Builds a, a† and a†a on levels 0..=n_max (dimension n_max + 1).
///
/// The commutator [a, a†] equals the identity except on the top level,
/// where truncation leaves −n_max on the diagonal.
pub fn fock_operators(n_max: usize) -> Result<FockOperators, LinalgError> {
    if n_max == 0 {
        return Err(LinalgError::TruncationTooSmall);
    }
    let dim = n_max + 1;
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a = Operator::from_matrix_unchecked(a);
    let a_dag = a.adjoint();
    let n = &a_dag * &a;
    Ok(FockOperators { a, a_dag, n })
}

/// Pauli matrices and spin ladder operators.
///
/// Basis index 0 is |0⟩ (ground), index 1 is |1⟩ (excited), so that
/// σ⁺ = |1⟩⟨0| raises and σ^z = |1⟩⟨1| − |0⟩⟨0|.
#[derive(Debug, Clone)]
pub struct PauliOperators {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub sp: Operator,
    pub sm: Operator,
}

pub fn pauli_operators() -> PauliOperators {
    let sp = Operator::basis_projector(2, 1, 0);
    let sm = Operator::basis_projector(2, 0, 1);
    let sz = &Operator::basis_projector(2, 1, 1) - &Operator::basis_projector(2, 0, 0);
    let sx = &sp + &sm;
    let sy = (&sp - &sm).scale(C64::new(0.0, -1.0));
    PauliOperators { sx, sy, sz, sp, sm }
}

/// Truncated coherent state together with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct CoherentKet {
    pub ket: Ket,
    /// Weight of the untruncated state on levels above n_max.
    pub tail_weight: f64,
    /// Set when `tail_weight` exceeds [`COHERENT_TAIL_LIMIT`].
    pub truncation_warning: bool,
}

pub const COHERENT_TAIL_LIMIT: f64 = 1e-6;

/// |α⟩ on levels 0..=n_max, amplitudes ∝ αⁿ/√n!, renormalized after truncation.
pub fn coherent_ket(alpha: C64, n_max: usize) -> Result<CoherentKet, LinalgError> {
    if n_max == 0 {
        return Err(LinalgError::TruncationTooSmall);
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(LinalgError::NonFinite("coherent amplitude"));
    }
    let dim = n_max + 1;
    let r2 = alpha.norm_sqr();
    let mut amps = Vec::with_capacity(dim);
    if r2 == 0.0 {
        amps.push(C64::new(1.0, 0.0));
        amps.resize(dim, C64::new(0.0, 0.0));
        return Ok(CoherentKet {
            ket: Ket::from_amplitudes(amps)?,
            tail_weight: 0.0,
            truncation_warning: false,
        });
    }
    let ln_r = alpha.norm().ln();
    let arg = alpha.arg();
    let mut kept = 0.0;
    for n in 0..dim {
        let nf = n as f64;
        // e^{-|α|²/2} |α|ⁿ / √n!  in log space
        let ln_mag = -0.5 * r2 + nf * ln_r - 0.5 * ln_factorial(n);
        let mag = ln_mag.exp();
        kept += mag * mag;
        amps.push(C64::from_polar(mag, nf * arg));
    }
    let tail_weight = (1.0 - kept).max(0.0);
    let norm = kept.sqrt();
    for z in amps.iter_mut() {
        *z /= norm;
    }
    Ok(CoherentKet {
        ket: Ket::from_amplitudes(amps)?,
        tail_weight,
        truncation_warning: tail_weight > COHERENT_TAIL_LIMIT,
    })
}

/// Spin coherent state exp(−iφσ^z/2) exp(−iθσ^y/2) |1⟩.
///
/// Components: ⟨0|θ,φ⟩ = e^{iφ/2} sin(θ/2), ⟨1|θ,φ⟩ = e^{−iφ/2} cos(θ/2).
pub fn spin_coherent_ket(theta: f64, phi: f64) -> Result<Ket, LinalgError> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
        return Err(LinalgError::AngleOutOfRange { theta });
    }
    let (s, c) = (0.5 * theta).sin_cos();
    Ket::from_amplitudes(vec![
        C64::from_polar(s, 0.5 * phi),
        C64::from_polar(c, -0.5 * phi),
    ])
}
