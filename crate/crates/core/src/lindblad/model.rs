use serde::{Deserialize, Serialize};

use super::LindbladError;
use crate::linalg::{fock_operators, pauli_operators, tensor, Operator};

/// Hermiticity tolerance for model Hamiltonians.
pub const HAMILTONIAN_HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Jump {
    pub op: Operator,
    pub rate: f64,
    pub label: String,
}

/// Tensor structure of the Hilbert space a model lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HilbertLayout {
    Boson { n_max: usize },
    TwoBosons { n_max: usize },
    Spin,
    TwoSpins,
    /// Anything built by hand.
    Generic { dim: usize },
}

impl HilbertLayout {
    pub fn dim(&self) -> usize {
        match *self {
            HilbertLayout::Boson { n_max } => n_max + 1,
            HilbertLayout::TwoBosons { n_max } => (n_max + 1) * (n_max + 1),
            HilbertLayout::Spin => 2,
            HilbertLayout::TwoSpins => 4,
            HilbertLayout::Generic { dim } => dim,
        }
    }

    /// Per-subsystem dimension for two-part layouts.
    pub fn factor_dims(&self) -> Option<(usize, usize)> {
        match *self {
            HilbertLayout::TwoBosons { n_max } => Some((n_max + 1, n_max + 1)),
            HilbertLayout::TwoSpins => Some((2, 2)),
            _ => None,
        }
    }
}

/// Hamiltonian plus weighted jump operators:
/// dρ/dt = −i[H, ρ] + Σ_k r_k D[L_k]ρ, D[o]ρ = oρo† − (o†oρ + ρo†o)/2.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    h: Operator,
    jumps: Vec<Jump>,
    layout: HilbertLayout,
    lowering: Vec<Operator>,
}

impl LindbladModel {
    pub fn new(h: Operator, jumps: Vec<Jump>, layout: HilbertLayout) -> Result<Self, LindbladError> {
        let dim = h.dim();
        if layout.dim() != dim {
            return Err(LindbladError::InvalidModel(format!(
                "layout dimension {} does not match Hamiltonian dimension {dim}",
                layout.dim()
            )));
        }
        let defect = h.hermiticity_defect();
        if defect > HAMILTONIAN_HERMITICITY_TOL {
            return Err(LindbladError::InvalidModel(format!("Hamiltonian not Hermitian (defect {defect:e})")));
        }
        for j in &jumps {
            if !j.rate.is_finite() || j.rate < 0.0 {
                return Err(LindbladError::InvalidModel(format!("rate of {} must be finite and ≥ 0, got {}", j.label, j.rate)));
            }
            if j.op.dim() != dim {
                return Err(LindbladError::InvalidModel(format!("jump {} has dimension {}, expected {dim}", j.label, j.op.dim())));
            }
        }
        Ok(Self {
            h,
            jumps,
            layout,
            lowering: Vec::new(),
        })
    }

    fn with_lowering(mut self, ops: Vec<Operator>) -> Self {
        self.lowering = ops;
        self
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Lowering operator of subsystem `i` (a, b, σ⁻_A, σ⁻_B in build order).
    pub fn lowering(&self, i: usize) -> Option<&Operator> {
        self.lowering.get(i)
    }

    pub fn n_subsystems(&self) -> usize {
        self.lowering.len()
    }

    /// Largest rate in the model.
    pub fn max_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).fold(0.0, f64::max)
    }
}

fn check_rates(pairs: &[(&str, f64)]) -> Result<(), LindbladError> {
    for (name, v) in pairs {
        if !v.is_finite() || *v < 0.0 {
            return Err(LindbladError::InvalidModel(format!("{name} must be finite and ≥ 0, got {v}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QvdpParams {
    pub omega: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
}

/// H = ω a†a; jumps a† (κ₁), a² (κ₂), a (κ).
pub fn build_qvdp_model(p: &QvdpParams, n_max: usize) -> Result<LindbladModel, LindbladError> {
    check_rates(&[("kappa1", p.kappa1), ("kappa2", p.kappa2), ("kappa", p.kappa)])?;
    if !p.omega.is_finite() {
        return Err(LindbladError::InvalidModel("omega must be finite".into()));
    }
    let f = fock_operators(n_max)?;
    let h = f.n.scale_real(p.omega);
    let jumps = vec![
        Jump { op: f.a_dag.clone(), rate: p.kappa1, label: "a_dag".into() },
        Jump { op: &f.a * &f.a, rate: p.kappa2, label: "a^2".into() },
        Jump { op: f.a.clone(), rate: p.kappa, label: "a".into() },
    ];
    Ok(LindbladModel::new(h, jumps, HilbertLayout::Boson { n_max })?.with_lowering(vec![f.a]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQvdpParams {
    pub delta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
}

/// H = (δ/2)(a†a − b†b); jumps a−b (V) plus gain, two-excitation loss and
/// linear loss on each mode.
pub fn build_two_qvdp_model(p: &TwoQvdpParams, n_max: usize) -> Result<LindbladModel, LindbladError> {
    check_rates(&[("V", p.v), ("kappa1", p.kappa1), ("kappa2", p.kappa2), ("kappa", p.kappa)])?;
    if !p.delta.is_finite() {
        return Err(LindbladError::InvalidModel("delta must be finite".into()));
    }
    let f = fock_operators(n_max)?;
    let id = Operator::identity(n_max + 1);
    let a = tensor(&f.a, &id);
    let b = tensor(&id, &f.a);
    let na = tensor(&f.n, &id);
    let nb = tensor(&id, &f.n);
    let h = (&na - &nb).scale_real(0.5 * p.delta);
    let jumps = vec![
        Jump { op: &a - &b, rate: p.v, label: "a-b".into() },
        Jump { op: a.adjoint(), rate: p.kappa1, label: "a_dag".into() },
        Jump { op: b.adjoint(), rate: p.kappa1, label: "b_dag".into() },
        Jump { op: &a * &a, rate: p.kappa2, label: "a^2".into() },
        Jump { op: &b * &b, rate: p.kappa2, label: "b^2".into() },
        Jump { op: a.clone(), rate: p.kappa, label: "a".into() },
        Jump { op: b.clone(), rate: p.kappa, label: "b".into() },
    ];
    Ok(LindbladModel::new(h, jumps, HilbertLayout::TwoBosons { n_max })?.with_lowering(vec![a, b]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    pub omega: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// H = (ω/2)σ^z; jumps σ⁺ (γ₊), σ⁻ (γ₋).
pub fn build_spin_model(p: &SpinParams) -> Result<LindbladModel, LindbladError> {
    check_rates(&[("gamma_plus", p.gamma_plus), ("gamma_minus", p.gamma_minus)])?;
    if !p.omega.is_finite() {
        return Err(LindbladError::InvalidModel("omega must be finite".into()));
    }
    let s = pauli_operators();
    let h = s.sz.scale_real(0.5 * p.omega);
    let jumps = vec![
        Jump { op: s.sp.clone(), rate: p.gamma_plus, label: "sigma_plus".into() },
        Jump { op: s.sm.clone(), rate: p.gamma_minus, label: "sigma_minus".into() },
    ];
    Ok(LindbladModel::new(h, jumps, HilbertLayout::Spin)?.with_lowering(vec![s.sm]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpinParams {
    pub delta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// H = (δ/4)(σ^z_A − σ^z_B); jumps σ⁻_A+σ⁻_B (V), σ⁺_{A,B} (γ₊), σ⁻_{A,B} (γ₋).
pub fn build_two_spin_model(p: &TwoSpinParams) -> Result<LindbladModel, LindbladError> {
    check_rates(&[("V", p.v), ("gamma_plus", p.gamma_plus), ("gamma_minus", p.gamma_minus)])?;
    if !p.delta.is_finite() {
        return Err(LindbladError::InvalidModel("delta must be finite".into()));
    }
    let s = pauli_operators();
    let id = Operator::identity(2);
    let sm_a = tensor(&s.sm, &id);
    let sm_b = tensor(&id, &s.sm);
    let sz_a = tensor(&s.sz, &id);
    let sz_b = tensor(&id, &s.sz);
    let h = (&sz_a - &sz_b).scale_real(0.25 * p.delta);
    let jumps = vec![
        Jump { op: &sm_a + &sm_b, rate: p.v, label: "sigma_minus_A+sigma_minus_B".into() },
        Jump { op: sm_a.adjoint(), rate: p.gamma_plus, label: "sigma_plus_A".into() },
        Jump { op: sm_b.adjoint(), rate: p.gamma_plus, label: "sigma_plus_B".into() },
        Jump { op: sm_a.clone(), rate: p.gamma_minus, label: "sigma_minus_A".into() },
        Jump { op: sm_b.clone(), rate: p.gamma_minus, label: "sigma_minus_B".into() },
    ];
    Ok(LindbladModel::new(h, jumps, HilbertLayout::TwoSpins)?.with_lowering(vec![sm_a, sm_b]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qvdp_structure() {
        let m = build_qvdp_model(&QvdpParams { omega: 4.0, kappa1: 4.0, kappa2: 0.5, kappa: 1.0 }, 10).unwrap();
        assert_eq!(m.dim(), 11);
        assert_eq!(m.jumps().len(), 3);
        assert_eq!(m.jumps()[1].rate, 0.5);
        assert!((m.hamiltonian().get(3, 3).re - 12.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rate_rejected() {
        let r = build_spin_model(&SpinParams { omega: 1.0, gamma_plus: -1.0, gamma_minus: 1.0 });
        assert!(matches!(r, Err(LindbladError::InvalidModel(_))));
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let f = fock_operators(3).unwrap();
        let r = LindbladModel::new(f.a.clone(), vec![], HilbertLayout::Boson { n_max: 3 });
        assert!(r.is_err());
    }

    #[test]
    fn two_mode_layout() {
        let m = build_two_qvdp_model(&TwoQvdpParams { delta: 1.0, v: 0.5, kappa1: 3.0, kappa2: 1.0, kappa: 1.0 }, 4).unwrap();
        assert_eq!(m.dim(), 25);
        assert_eq!(m.layout().factor_dims(), Some((5, 5)));
        assert_eq!(m.n_subsystems(), 2);
    }
}
