use nalgebra::DMatrix;

use super::{Operator, C64};

/// Compressed list of the nonzero entries of an [`Operator`].
///
/// Only used as an execution format for matrix products inside the
/// Liouvillian and the stochastic stepper; operators are stored densely.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    // (row, col, value)
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub fn from_operator(op: &Operator) -> Self {
        let dim = op.dim();
        let m = op.matrix();
        let mut entries = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// out += factor · S · X
    pub fn mul_left_acc(&self, factor: C64, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for col in 0..n {
            let xc = &xs[col * n..(col + 1) * n];
            let oc = &mut os[col * n..(col + 1) * n];
            for &(i, k, v) in &self.entries {
                oc[i] += factor * v * xc[k];
            }
        }
    }

    /// out += factor · X · S†
    pub fn mul_right_adjoint_acc(&self, factor: C64, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for &(j, k, v) in &self.entries {
            let w = factor * v.conj();
            let (src, dst) = (k * n, j * n);
            for i in 0..n {
                os[dst + i] += w * xs[src + i];
            }
        }
    }

    /// Tr[S · X]
    pub fn trace_product(&self, x: &DMatrix<C64>) -> C64 {
        self.entries
            .iter()
            .fold(C64::new(0.0, 0.0), |acc, &(i, k, v)| acc + v * x[(k, i)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fock_operators;

    fn sample(dim: usize) -> DMatrix<C64> {
        DMatrix::from_fn(dim, dim, |i, j| {
            C64::new((i as f64 * 0.37 + j as f64).sin(), (i as f64 - 2.0 * j as f64).cos())
        })
    }

    #[test]
    fn sparse_products_match_dense() {
        let ops = fock_operators(6).unwrap();
        let s_op = &ops.a * &ops.a;
        let s = SparseOperator::from_operator(&s_op);
        assert_eq!(s.nnz(), 5);
        let x = sample(7);
        let f = C64::new(0.3, -1.1);

        let mut out = DMatrix::zeros(7, 7);
        s.mul_left_acc(f, &x, &mut out);
        let dense = s_op.matrix() * &x * f;
        assert!((out - dense).camax() < 1e-12);

        let mut out = DMatrix::zeros(7, 7);
        s.mul_right_adjoint_acc(f, &x, &mut out);
        let dense = &x * s_op.matrix().adjoint() * f;
        assert!((out - dense).camax() < 1e-12);

        let tr = s.trace_product(&x);
        assert!((tr - (s_op.matrix() * &x).trace()).norm() < 1e-12);
    }
}
