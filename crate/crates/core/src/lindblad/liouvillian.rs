use nalgebra::DMatrix;

use super::{HilbertLayout, LindbladModel};
use crate::linalg::{Operator, SparseOperator, C64};

/// Matrix dimension up to which the explicit superoperator is built.
pub const DEFAULT_DENSE_DIM_BOUND: usize = 32;

/// Action of the master-equation right-hand side,
/// L(X) = K X + X K† + Σ r L X L† with K = −iH − ½ Σ r L†L.
///
/// Works on arbitrary (also non-Hermitian) matrices, which the regression
/// theorem needs.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    layout: HilbertLayout,
    k: SparseOperator,
    jumps: Vec<(SparseOperator, f64)>,
    /// Max |H| entry plus the largest rate, a crude scale for step sizes.
    scale: f64,
}

impl Liouvillian {
    pub fn new(model: &LindbladModel) -> Self {
        Self::with_jump_mask(model, &vec![true; model.jumps().len()])
    }

    /// Keeps only the jumps whose mask entry is true.
    pub fn with_jump_mask(model: &LindbladModel, keep: &[bool]) -> Self {
        let dim = model.dim();
        let mut k = model.hamiltonian().scale(C64::new(0.0, -1.0));
        let mut jumps = Vec::new();
        for (j, &keep) in model.jumps().iter().zip(keep) {
            if !keep || j.rate == 0.0 {
                continue;
            }
            let ldl = &j.op.adjoint() * &j.op;
            k = &k - &ldl.scale_real(0.5 * j.rate);
            jumps.push((SparseOperator::from_operator(&j.op), j.rate));
        }
        let scale = model.hamiltonian().max_abs() + model.max_rate();
        Self {
            dim,
            layout: model.layout(),
            k: SparseOperator::from_operator(&k),
            jumps,
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// out = L(x); `tmp` is scratch of the same shape.
    pub fn apply_into(&self, x: &DMatrix<C64>, out: &mut DMatrix<C64>, tmp: &mut DMatrix<C64>) {
        let one = C64::new(1.0, 0.0);
        out.fill(C64::new(0.0, 0.0));
        self.k.mul_left_acc(one, x, out);
        self.k.mul_right_adjoint_acc(one, x, out);
        for (l, rate) in &self.jumps {
            tmp.fill(C64::new(0.0, 0.0));
            l.mul_right_adjoint_acc(one, x, tmp);
            l.mul_left_acc(C64::new(*rate, 0.0), tmp, out);
        }
    }

    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let mut tmp = DMatrix::zeros(self.dim, self.dim);
        self.apply_into(x, &mut out, &mut tmp);
        out
    }

    pub fn apply_op(&self, x: &Operator) -> DMatrix<C64> {
        self.apply(x.matrix())
    }

    /// Explicit dim²×dim² matrix on column-stacked vec(ρ).
    pub fn superoperator(&self) -> DMatrix<C64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n * n, n * n);
        let mut e = DMatrix::zeros(n, n);
        let mut out = DMatrix::zeros(n, n);
        let mut tmp = DMatrix::zeros(n, n);
        for col in 0..n * n {
            e.as_mut_slice()[col] = C64::new(1.0, 0.0);
            self.apply_into(&e, &mut out, &mut tmp);
            m.column_mut(col).copy_from_slice(out.as_slice());
            e.as_mut_slice()[col] = C64::new(0.0, 0.0);
        }
        m
    }

    /// Power-iteration estimate of the largest |eigenvalue| of L.
    pub fn spectral_radius_estimate(&self) -> f64 {
        let n = self.dim;
        let mut x = DMatrix::from_fn(n, n, |i, j| {
            C64::new(((i * 7 + j * 3) as f64 * 0.61).sin(), ((i * 5 + j * 11) as f64 * 0.37).cos())
        });
        let mut out = DMatrix::zeros(n, n);
        let mut tmp = DMatrix::zeros(n, n);
        let mut estimate = 0.0;
        for _ in 0..60 {
            let norm = x.norm();
            if norm == 0.0 {
                break;
            }
            x /= C64::new(norm, 0.0);
            self.apply_into(&x, &mut out, &mut tmp);
            estimate = out.norm();
            std::mem::swap(&mut x, &mut out);
        }
        estimate.max(self.scale * 1e-3).max(1e-12)
    }

    /// RK4 step size safely inside the stability region.
    pub fn stable_step(&self) -> f64 {
        // RK4 is stable to |hλ| ≈ 2.8 along both axes; keep a margin
        2.0 / (1.3 * self.spectral_radius_estimate())
    }
}

/// Preallocated buffers for fixed-step RK4 on X ↦ L(X).
pub struct Rk4 {
    k: [DMatrix<C64>; 4],
    stage: DMatrix<C64>,
    tmp: DMatrix<C64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = || DMatrix::zeros(dim, dim);
        Self {
            k: [z(), z(), z(), z()],
            stage: z(),
            tmp: z(),
        }
    }

    pub fn step(&mut self, l: &Liouvillian, x: &mut DMatrix<C64>, h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        l.apply_into(x, k1, &mut self.tmp);
        combine(&mut self.stage, x, k1, 0.5 * h);
        l.apply_into(&self.stage, k2, &mut self.tmp);
        combine(&mut self.stage, x, k2, 0.5 * h);
        l.apply_into(&self.stage, k3, &mut self.tmp);
        combine(&mut self.stage, x, k3, h);
        l.apply_into(&self.stage, k4, &mut self.tmp);
        let c = h / 6.0;
        let xs = x.as_mut_slice();
        let (s1, s2, s3, s4) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
        for i in 0..xs.len() {
            xs[i] += (s1[i] + (s2[i] + s3[i]) * 2.0 + s4[i]) * c;
        }
    }
}

/// out = x + h·k
fn combine(out: &mut DMatrix<C64>, x: &DMatrix<C64>, k: &DMatrix<C64>, h: f64) {
    for ((o, a), b) in out.as_mut_slice().iter_mut().zip(x.as_slice()).zip(k.as_slice()) {
        *o = a + b * h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_qvdp_model, build_two_spin_model, QvdpParams, TwoSpinParams};
    use proptest::prelude::*;

    fn dissipator_dense(l: &Operator, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let lm = l.matrix();
        let ldl = lm.adjoint() * lm;
        lm * rho * lm.adjoint() - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0)
    }

    #[test]
    fn action_matches_dense_formula() {
        let model = build_qvdp_model(&QvdpParams { omega: 1.3, kappa1: 0.7, kappa2: 0.4, kappa: 0.2 }, 5).unwrap();
        let l = Liouvillian::new(&model);
        let rho = DMatrix::from_fn(6, 6, |i, j| C64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
        let h = model.hamiltonian().matrix();
        let mut expected = (h * &rho - &rho * h) * C64::new(0.0, -1.0);
        for j in model.jumps() {
            expected += dissipator_dense(&j.op, &rho) * C64::new(j.rate, 0.0);
        }
        assert!((l.apply(&rho) - expected).camax() < 1e-12);
    }

    #[test]
    fn superoperator_agrees_with_action() {
        let model = build_two_spin_model(&TwoSpinParams { delta: 0.5, v: 1.0, gamma_plus: 0.5, gamma_minus: 1.0 }).unwrap();
        let l = Liouvillian::new(&model);
        let m = l.superoperator();
        let x = DMatrix::from_fn(4, 4, |i, j| C64::new(i as f64 - 0.3 * j as f64, 0.2 * (i * j) as f64));
        let v = nalgebra::DVector::from_column_slice(x.as_slice());
        let mv = &m * v;
        let ax = l.apply(&x);
        for (a, b) in mv.iter().zip(ax.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn trace_and_hermiticity_preserved(entries in proptest::collection::vec(-1.0f64..1.0, 72)) {
            let model = build_qvdp_model(&QvdpParams { omega: 2.0, kappa1: 1.0, kappa2: 0.5, kappa: 0.3 }, 5).unwrap();
            let l = Liouvillian::new(&model);
            let a = DMatrix::from_fn(6, 6, |i, j| C64::new(entries[i * 6 + j], entries[36 + i * 6 + j]));
            let herm = (&a + a.adjoint()) * C64::new(0.5, 0.0);
            let out = l.apply(&herm);
            let scale = herm.norm().max(1.0);
            prop_assert!(out.trace().norm() <= 1e-10 * scale);
            prop_assert!((&out - out.adjoint()).camax() <= 1e-12 * scale * 10.0);
        }
    }
}
