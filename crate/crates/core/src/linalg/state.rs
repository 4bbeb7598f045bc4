use nalgebra::{DMatrix, DVector};

use super::{LinalgError, Operator, C64};

/// State vector on a truncated Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: DVector<C64>,
}

impl Ket {
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, LinalgError> {
        if amps.is_empty() {
            return Err(LinalgError::EmptyDimension);
        }
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(LinalgError::NonFinite("ket amplitude"));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨ψ|A|ψ⟩
    pub fn expect(&self, op: &Operator) -> C64 {
        self.amps.dotc(&(op.matrix() * &self.amps))
    }

    /// ⟨ψ|ρ|ψ⟩ for an arbitrary matrix.
    pub fn sandwich(&self, mat: &DMatrix<C64>) -> C64 {
        self.amps.dotc(&(mat * &self.amps))
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket {
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> Operator {
        Operator::from_matrix_unchecked(&self.amps * self.amps.adjoint())
    }
}

pub const DEFAULT_TRACE_TOL: f64 = 1e-9;
pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as numerically nonnegative.
pub const POSITIVITY_SLACK: f64 = 1e-8;

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: Operator,
    hermiticity_tol: f64,
    trace_tol: f64,
}

impl DensityOperator {
    /// Validates trace, Hermiticity and positivity with the default tolerances.
    pub fn new(op: Operator) -> Result<Self, LinalgError> {
        Self::with_tolerances(op, DEFAULT_HERMITICITY_TOL, DEFAULT_TRACE_TOL)
    }

    pub fn with_tolerances(
        op: Operator,
        hermiticity_tol: f64,
        trace_tol: f64,
    ) -> Result<Self, LinalgError> {
        let rho = Self {
            op,
            hermiticity_tol,
            trace_tol,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips the eigenvalue check; callers guarantee the invariants.
    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self {
            op,
            hermiticity_tol: DEFAULT_HERMITICITY_TOL,
            trace_tol: DEFAULT_TRACE_TOL,
        }
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        let tr = self.op.trace();
        if !(tr.re.is_finite() && tr.im.is_finite()) {
            return Err(LinalgError::NonFinite("density operator"));
        }
        let trace_error = (tr - C64::new(1.0, 0.0)).norm();
        if trace_error > self.trace_tol {
            return Err(LinalgError::TraceNotUnit { deviation: trace_error });
        }
        let herm = self.op.hermiticity_defect();
        if herm > self.hermiticity_tol {
            return Err(LinalgError::NotHermitian { defect: herm });
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -POSITIVITY_SLACK {
            return Err(LinalgError::NotPositive { min_eigenvalue: min_eig });
        }
        Ok(())
    }

    pub fn from_ket(ket: &Ket) -> Self {
        let mut rho = Self::new_unchecked(ket.projector());
        let norm2 = ket.norm().powi(2);
        if (norm2 - 1.0).abs() > 0.0 {
            rho.op = rho.op.scale_real(1.0 / norm2);
        }
        rho
    }

    /// I/dim
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Diagonal state with the given (nonnegative, normalized) populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self, LinalgError> {
        let dim = populations.len();
        let mut mat = DMatrix::zeros(dim, dim);
        for (i, p) in populations.iter().enumerate() {
            mat[(i, i)] = C64::new(*p, 0.0);
        }
        Self::new(Operator::from_matrix(mat)?)
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn hermiticity_tol(&self) -> f64 {
        self.hermiticity_tol
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    /// Tr[A ρ]
    pub fn expect(&self, op: &Operator) -> C64 {
        op.expect_in(self.op.matrix())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = self.op.hermitian_part();
        let mut ev: Vec<f64> = herm.into_matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        let m = self.op.matrix();
        m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ½ Tr|ρ − σ|
    pub fn trace_distance(&self, other: &DensityOperator) -> f64 {
        let diff = (&self.op - &other.op).hermitian_part();
        0.5 * diff
            .into_matrix()
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x.abs())
            .sum::<f64>()
    }

    /// Diagonal entries in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        let m = self.op.matrix();
        (0..self.dim()).map(|i| m[(i, i)].re).collect()
    }

    /// Reduced state of the first factor of a bipartite dim_a × dim_b space.
    pub fn partial_trace_second(&self, dim_a: usize, dim_b: usize) -> DensityOperator {
        assert_eq!(dim_a * dim_b, self.dim(), "bipartition does not match dimension");
        let m = self.op.matrix();
        let mut out = DMatrix::zeros(dim_a, dim_a);
        for i in 0..dim_a {
            for j in 0..dim_a {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim_b {
                    acc += m[(i * dim_b + k, j * dim_b + k)];
                }
                out[(i, j)] = acc;
            }
        }
        DensityOperator::new_unchecked(Operator::from_matrix_unchecked(out))
    }

    /// Reduced state of the second factor.
    pub fn partial_trace_first(&self, dim_a: usize, dim_b: usize) -> DensityOperator {
        assert_eq!(dim_a * dim_b, self.dim(), "bipartition does not match dimension");
        let m = self.op.matrix();
        let mut out = DMatrix::zeros(dim_b, dim_b);
        for i in 0..dim_b {
            for j in 0..dim_b {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim_a {
                    acc += m[(k * dim_b + i, k * dim_b + j)];
                }
                out[(i, j)] = acc;
            }
        }
        DensityOperator::new_unchecked(Operator::from_matrix_unchecked(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{coherent_ket, tensor};

    #[test]
    fn rejects_bad_trace_and_non_hermitian() {
        let op = Operator::identity(2);
        assert!(matches!(
            DensityOperator::new(op),
            Err(LinalgError::TraceNotUnit { .. })
        ));
        let mut m = DMatrix::from_diagonal_element(2, 2, C64::new(0.5, 0.0));
        m[(0, 1)] = C64::new(0.1, 0.0);
        let op = Operator::from_matrix(m).unwrap();
        assert!(matches!(
            DensityOperator::new(op),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.2, 0.0),
            C64::new(-0.2, 0.0),
        ]));
        let op = Operator::from_matrix(m).unwrap();
        assert!(matches!(
            DensityOperator::new(op),
            Err(LinalgError::NotPositive { .. })
        ));
    }

    #[test]
    fn pure_state_properties() {
        let k = coherent_ket(C64::new(0.6, -0.3), 15).unwrap().ket;
        let rho = DensityOperator::from_ket(&k);
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(rho.trace_distance(&rho) < 1e-14);
        let mixed = DensityOperator::maximally_mixed(16);
        let td = rho.trace_distance(&mixed);
        assert!((td - 15.0 / 16.0).abs() < 1e-10);
    }

    #[test]
    fn partial_traces_of_product() {
        let a = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let b = DensityOperator::diagonal(&[0.1, 0.2, 0.7]).unwrap();
        let ab = DensityOperator::new(tensor(a.operator(), b.operator())).unwrap();
        assert!(ab.partial_trace_second(2, 3).operator().max_abs_diff(a.operator()) < 1e-15);
        assert!(ab.partial_trace_first(2, 3).operator().max_abs_diff(b.operator()) < 1e-15);
    }
}
