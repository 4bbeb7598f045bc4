use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use super::{LinalgError, C64};

/// Dense complex matrix acting on a truncated Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self, LinalgError> {
        if mat.nrows() != mat.ncols() {
            return Err(LinalgError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        Ok(Self { mat })
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self, LinalgError> {
        if entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    /// Outer product |i⟩⟨j| in the computational basis.
    pub fn basis_projector(dim: usize, i: usize, j: usize) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        mat[(i, j)] = C64::new(1.0, 0.0);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            mat: &self.mat * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        self * other + other * self
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// max|A − A†|
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..=j {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Self {
        Self {
            mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    /// Tr[self · rho]
    pub fn expect_in(&self, rho: &DMatrix<C64>) -> C64 {
        trace_of_product(&self.mat, rho)
    }

    /// Matrix power with a non-negative integer exponent.
    pub fn powi(&self, exponent: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }
}

/// Tr[A·B] without forming the product.
pub fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim={}) {:?}", self.dim(), self.mat)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl Mul<Operator> for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Add<Operator> for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Sub<Operator> for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat }
    }
}

/// Kronecker product A⊗B. The first factor is the slow (outer) index.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator {
        mat: a.mat.kronecker(&b.mat),
    }
}
