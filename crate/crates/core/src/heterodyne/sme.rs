use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HeterodyneError, HeterodyneRecord, MonitoredChannel};
use crate::lindblad::{Liouvillian, LindbladError, LindbladModel, MeSample, Rk4};
use crate::linalg::{trace_of_product, DensityOperator, Operator, SparseOperator, C64};
use crate::rng::{normal, stream_rng};

/// Eigenvalue below which a conditional state aborts the trajectory.
pub const SME_NEGATIVITY_LIMIT: f64 = 1e-4;

/// How the stochastic increment is combined with the deterministic step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SmeScheme {
    /// RK4 for the unmonitored part of L, then per channel the Kraus map
    /// M = 1 − ½r L†L dt + √r L dY* with dY = √r⟨L⟩dt + dZ, then
    /// renormalization. Positive by construction.
    #[default]
    KrausSplit,
    /// RK4 for the full L plus the Euler–Maruyama innovation term.
    EulerMaruyama,
}

#[derive(Debug, Clone)]
pub struct SmeOptions {
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
    pub scheme: SmeScheme,
    /// Extra operators whose conditional expectations are recorded.
    pub observables: Vec<Operator>,
    /// Times at which the conditional state is stored.
    pub snapshot_times: Vec<f64>,
    /// Eigenvalue check of the conditional state at every sample.
    pub check_positivity: bool,
    /// Allowed |Tr ρ − 1| of the deterministic step before renormalization.
    pub trace_tol: f64,
}

impl SmeOptions {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            sample_every: 1,
            scheme: SmeScheme::default(),
            observables: Vec::new(),
            snapshot_times: Vec::new(),
            check_positivity: true,
            trace_tol: 1e-6,
        }
    }

    pub fn with_sample_every(mut self, k: usize) -> Self {
        self.sample_every = k.max(1);
        self
    }

    pub fn with_scheme(mut self, scheme: SmeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_observables(mut self, ops: Vec<Operator>) -> Self {
        self.observables = ops;
        self
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone)]
struct PreparedChannel {
    op: SparseOperator,
    ldl: SparseOperator,
    rate: f64,
    ldl_norm: f64,
}

/// Model and monitored channels prepared for repeated trajectories.
#[derive(Debug, Clone)]
pub struct SmeSystem {
    l_det: Liouvillian,
    scheme: SmeScheme,
    channels: Vec<PreparedChannel>,
    labels: Vec<String>,
    stable_step: f64,
}

impl SmeSystem {
    pub fn new(model: &LindbladModel, channels: &[MonitoredChannel], scheme: SmeScheme) -> Result<Self, HeterodyneError> {
        if channels.is_empty() {
            return Err(HeterodyneError::InvalidArgument("no monitored channels".into()));
        }
        let mut keep = vec![true; model.jumps().len()];
        let mut prepared = Vec::with_capacity(channels.len());
        for ch in channels {
            let idx = ch.match_jump(model)?;
            if !keep[idx] {
                return Err(HeterodyneError::ChannelMismatch {
                    label: ch.label.clone(),
                    reason: "dissipator monitored twice".into(),
                });
            }
            if scheme == SmeScheme::KrausSplit {
                keep[idx] = false;
            }
            let ldl = &ch.op.adjoint() * &ch.op;
            prepared.push(PreparedChannel {
                op: SparseOperator::from_operator(&ch.op),
                ldl_norm: ldl.matrix().norm(),
                ldl: SparseOperator::from_operator(&ldl),
                rate: ch.rate,
            });
        }
        let l_det = Liouvillian::with_jump_mask(model, &keep);
        let stable_step = l_det.stable_step();
        Ok(Self {
            l_det,
            scheme,
            channels: prepared,
            labels: channels.iter().map(|c| c.label.clone()).collect(),
            stable_step,
        })
    }

    pub fn dim(&self) -> usize {
        self.l_det.dim()
    }

    pub fn scheme(&self) -> SmeScheme {
        self.scheme
    }

    /// Largest dt allowed by the deterministic stepper and by the Kraus
    /// expansion (r·dt·‖L†L‖ ≤ 0.5).
    pub fn max_step(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| 0.5 / (c.rate * c.ldl_norm).max(1e-300))
            .fold(self.stable_step, f64::min)
    }

    fn check(&self, rho0: &DensityOperator, opts: &SmeOptions) -> Result<(), HeterodyneError> {
        if rho0.dim() != self.dim() {
            return Err(LindbladError::DimensionMismatch { expected: self.dim(), found: rho0.dim() }.into());
        }
        if !(opts.dt > 0.0 && opts.dt.is_finite()) || !(opts.t_final > 0.0 && opts.t_final.is_finite()) {
            return Err(HeterodyneError::InvalidArgument(format!(
                "need dt > 0 and T > 0, got dt={}, T={}",
                opts.dt, opts.t_final
            )));
        }
        if opts.dt > self.max_step() {
            return Err(LindbladError::StepSize {
                t: 0.0,
                dt: opts.dt,
                suggested_dt: self.max_step(),
                cause: "step exceeds the stable step of the conditional stepper".into(),
            }
            .into());
        }
        if opts.n_steps() < opts.sample_every.max(1) {
            return Err(HeterodyneError::InvalidArgument("T shorter than one sample interval".into()));
        }
        if let Some(o) = opts.observables.iter().find(|o| o.dim() != self.dim()) {
            return Err(LindbladError::DimensionMismatch { expected: self.dim(), found: o.dim() }.into());
        }
        Ok(())
    }

    /// Integrates one trajectory with random stream `stream` of `seed`.
    pub fn run(
        &self,
        rho0: &DensityOperator,
        opts: &SmeOptions,
        seed: u64,
        stream: u64,
    ) -> Result<HeterodyneRecord, HeterodyneError> {
        self.check(rho0, opts)?;
        let n = self.dim();
        let dt = opts.dt;
        let every = opts.sample_every.max(1);
        let n_samples = opts.n_steps() / every;
        let n_ch = self.channels.len();
        let mut rng = stream_rng(seed, stream);
        let mut rk = Rk4::new(n);
        let mut x = rho0.matrix().clone();
        let mut y = DMatrix::<C64>::zeros(n, n);
        let mut z = DMatrix::<C64>::zeros(n, n);
        let zero = C64::new(0.0, 0.0);

        let mut rec = HeterodyneRecord {
            seed,
            stream,
            dt,
            sample_every: every,
            rates: self.channels.iter().map(|c| c.rate).collect(),
            labels: self.labels.clone(),
            times: Vec::with_capacity(n_samples),
            cond_expectations: vec![Vec::with_capacity(n_samples); n_ch],
            mean_expectations: vec![Vec::with_capacity(n_samples); n_ch],
            noise: vec![Vec::with_capacity(n_samples); n_ch],
            observables: vec![Vec::with_capacity(n_samples); opts.observables.len()],
            snapshots: Vec::new(),
        };
        let mut snaps: Vec<f64> = opts.snapshot_times.clone();
        snaps.sort_by(f64::total_cmp);
        let mut next_snap = 0usize;
        let mut exps = vec![zero; n_ch];
        let mut dzs = vec![zero; n_ch];
        let sdt = (0.5 * dt).sqrt();

        for k in 0..n_samples {
            let t_k = (k * every) as f64 * dt;
            rec.times.push(t_k);
            for (c, ch) in self.channels.iter().enumerate() {
                rec.cond_expectations[c].push(ch.op.trace_product(&x));
            }
            for (o, op) in opts.observables.iter().enumerate() {
                rec.observables[o].push(trace_of_product(op.matrix(), &x));
            }
            if opts.check_positivity || next_snap < snaps.len() {
                let rho = DensityOperator::new_unchecked(Operator::from_matrix(x.clone())?);
                if opts.check_positivity {
                    let min_eig = rho.min_eigenvalue();
                    if min_eig < -SME_NEGATIVITY_LIMIT || !min_eig.is_finite() {
                        return Err(HeterodyneError::NegativeEigenvalue {
                            t: t_k,
                            dt,
                            min_eigenvalue: min_eig,
                            suggested_dt: 0.5 * dt,
                        });
                    }
                }
                while next_snap < snaps.len() && snaps[next_snap] <= t_k + 0.5 * dt {
                    rec.snapshots.push(MeSample { t: t_k, rho: rho.clone() });
                    next_snap += 1;
                }
            }

            let mut sum_exp = vec![zero; n_ch];
            let mut sum_noise = vec![zero; n_ch];
            for s in 0..every {
                for (c, ch) in self.channels.iter().enumerate() {
                    exps[c] = ch.op.trace_product(&x);
                    sum_exp[c] += exps[c];
                }
                rk.step(&self.l_det, &mut x, dt);
                let drift = (x.trace() - C64::new(1.0, 0.0)).norm();
                if !(drift <= opts.trace_tol) {
                    return Err(HeterodyneError::TraceDrift {
                        t: t_k + s as f64 * dt,
                        dt,
                        drift,
                        suggested_dt: 0.5 * dt,
                    });
                }
                for dz in dzs.iter_mut() {
                    let wx = normal(&mut rng);
                    let wy = normal(&mut rng);
                    *dz = C64::new(wx, wy) * sdt;
                }
                for c in 0..n_ch {
                    sum_noise[c] += dzs[c] / dt;
                }
                match self.scheme {
                    SmeScheme::KrausSplit => {
                        for (c, ch) in self.channels.iter().enumerate() {
                            let sr = ch.rate.sqrt();
                            let dy = exps[c] * (sr * dt) + dzs[c];
                            let lin = C64::new(-0.5 * ch.rate * dt, 0.0);
                            // y = M x
                            y.copy_from(&x);
                            ch.ldl.mul_left_acc(lin, &x, &mut y);
                            ch.op.mul_left_acc(dy.conj() * sr, &x, &mut y);
                            // x = y M†
                            x.copy_from(&y);
                            ch.ldl.mul_right_adjoint_acc(lin, &y, &mut x);
                            ch.op.mul_right_adjoint_acc(dy * sr, &y, &mut x);
                        }
                    }
                    SmeScheme::EulerMaruyama => {
                        // innovation from the pre-step state would need a copy;
                        // the post-RK4 state differs by O(dt), below EM order
                        z.fill(zero);
                        for (c, ch) in self.channels.iter().enumerate() {
                            let sr = ch.rate.sqrt();
                            let mean = ch.op.trace_product(&x);
                            ch.op.mul_left_acc(dzs[c].conj() * sr, &x, &mut z);
                            ch.op.mul_right_adjoint_acc(dzs[c] * sr, &x, &mut z);
                            let shift = (mean * dzs[c].conj() + mean.conj() * dzs[c]) * sr;
                            z.zip_apply(&x, |zv, xv| *zv -= shift * xv);
                        }
                        x += &z;
                    }
                }
                // Hermitian part, unit trace
                let tr = x.trace();
                y.copy_from(&x);
                y.adjoint_to(&mut z);
                let scale = C64::new(0.5, 0.0) / tr;
                x.zip_zip_apply(&y, &z, |xv, a, b| *xv = (a + b) * scale);
                if !(tr.re.is_finite() && tr.im.is_finite()) || tr.re <= 0.0 {
                    return Err(HeterodyneError::NegativeEigenvalue {
                        t: t_k + s as f64 * dt,
                        dt,
                        min_eigenvalue: f64::NAN,
                        suggested_dt: 0.5 * dt,
                    });
                }
            }
            let inv = 1.0 / every as f64;
            for c in 0..n_ch {
                rec.mean_expectations[c].push(sum_exp[c] * inv);
                rec.noise[c].push(sum_noise[c] * inv);
            }
        }
        Ok(rec)
    }
}

/// One heterodyne trajectory (stream 0 of `seed`).
pub fn evolve_sme(
    model: &LindbladModel,
    channels: &[MonitoredChannel],
    rho0: &DensityOperator,
    opts: &SmeOptions,
    seed: u64,
) -> Result<HeterodyneRecord, HeterodyneError> {
    SmeSystem::new(model, channels, opts.scheme)?.run(rho0, opts, seed, 0)
}

/// `n_traj` independent trajectories on streams 0..n_traj of `seed`, run in
/// parallel; the output order is the stream order.
pub fn evolve_sme_ensemble(
    model: &LindbladModel,
    channels: &[MonitoredChannel],
    rho0: &DensityOperator,
    opts: &SmeOptions,
    seed: u64,
    n_traj: usize,
) -> Result<Vec<HeterodyneRecord>, HeterodyneError> {
    if n_traj == 0 {
        return Err(HeterodyneError::InvalidArgument("n_traj must be at least 1".into()));
    }
    let system = SmeSystem::new(model, channels, opts.scheme)?;
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| system.run(rho0, opts, seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_qvdp_model, build_spin_model, evolve_expectations, QvdpParams, SpinParams};
    use crate::linalg::{fock_operators, pauli_operators, spin_coherent_ket, Ket};

    fn spin_setup() -> (LindbladModel, Vec<MonitoredChannel>) {
        let m = build_spin_model(&SpinParams { omega: 2.0, gamma_plus: 0.5, gamma_minus: 1.0 }).unwrap();
        let ch = vec![MonitoredChannel::from_jump(&m, "sigma_minus").unwrap()];
        (m, ch)
    }

    #[test]
    fn channel_must_match_a_dissipator() {
        let (m, _) = spin_setup();
        let s = pauli_operators();
        let wrong_rate = MonitoredChannel::new(s.sm.clone(), 0.7, "sm").unwrap();
        assert!(matches!(
            SmeSystem::new(&m, &[wrong_rate], SmeScheme::KrausSplit),
            Err(HeterodyneError::ChannelMismatch { .. })
        ));
        let wrong_op = MonitoredChannel::new(s.sz.clone(), 1.0, "sz").unwrap();
        assert!(SmeSystem::new(&m, &[wrong_op], SmeScheme::KrausSplit).is_err());
        assert!(MonitoredChannel::new(s.sm, 0.0, "sm").is_err());
    }

    #[test]
    fn reproducible_and_stream_dependent() {
        let (m, ch) = spin_setup();
        let rho0 = DensityOperator::from_ket(&spin_coherent_ket(1.2, 0.0).unwrap());
        let opts = SmeOptions::new(1e-3, 2.0).with_sample_every(10);
        let a = evolve_sme(&m, &ch, &rho0, &opts, 5).unwrap();
        let b = evolve_sme(&m, &ch, &rho0, &opts, 5).unwrap();
        let c = evolve_sme(&m, &ch, &rho0, &opts, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.noise, c.noise);
        assert_eq!(a.times.len(), 200);
        assert_eq!(a.cond_expectations[0].len(), a.times.len());
    }

    #[test]
    fn vanishing_rate_matches_master_equation() {
        // backaction scales as √rate, so agreement to 1e-6 over t = 1 needs rate ≲ 1e-12
        let p = QvdpParams { omega: 4.0, kappa1: 4.0, kappa2: 0.5, kappa: 1e-15 };
        let m = build_qvdp_model(&p, 12).unwrap();
        let ch = vec![MonitoredChannel::from_jump(&m, "a").unwrap()];
        let a = fock_operators(12).unwrap().a;
        let rho0 = DensityOperator::from_ket(&crate::linalg::coherent_ket(C64::new(1.0, 0.0), 12).unwrap().ket);
        let opts = SmeOptions::new(1e-3, 1.0).with_sample_every(50).with_observables(vec![a.clone()]);
        let l = Liouvillian::new(&m);
        let me = evolve_expectations(&l, &rho0, 1e-3, 1.0, 50, &[a]).unwrap();
        for scheme in [SmeScheme::KrausSplit, SmeScheme::EulerMaruyama] {
            let rec = evolve_sme(&m, &ch, &rho0, &opts.clone().with_scheme(scheme), 1).unwrap();
            for (v, w) in rec.observables[0].iter().zip(&me.values[0]) {
                assert!((v - w).norm() < 1e-6, "{scheme:?}: {v} vs {w}");
            }
        }
    }

    #[test]
    fn dark_channel_current_is_pure_noise() {
        // vacuum, no gain: ⟨a⟩_m stays 0
        let p = QvdpParams { omega: 1.0, kappa1: 0.0, kappa2: 0.0, kappa: 1.0 };
        let m = build_qvdp_model(&p, 3).unwrap();
        let ch = vec![MonitoredChannel::from_jump(&m, "a").unwrap()];
        let rho0 = DensityOperator::from_ket(&Ket::basis(4, 0));
        let dt = 1e-2;
        let rec = evolve_sme(&m, &ch, &rho0, &SmeOptions::new(dt, 200.0), 3).unwrap();
        assert!(rec.cond_expectations[0].iter().all(|v| v.norm() < 1e-12));
        let n = rec.noise[0].len() as f64;
        let mean = rec.noise[0].iter().sum::<C64>() / n;
        let var_re = rec.noise[0].iter().map(|v| (v.re * dt.sqrt()).powi(2)).sum::<f64>() / n;
        assert!(mean.norm() * dt.sqrt() < 4.0 * (0.5 / n).sqrt());
        assert!((var_re - 0.5).abs() < 0.03, "{var_re}");
    }

    #[test]
    fn states_stay_physical() {
        let (m, ch) = spin_setup();
        let rho0 = DensityOperator::from_ket(&spin_coherent_ket(0.3, 1.0).unwrap());
        let opts = SmeOptions::new(1e-3, 5.0).with_sample_every(100).with_snapshots(vec![1.0, 2.5, 4.0]);
        let rec = evolve_sme(&m, &ch, &rho0, &opts, 9).unwrap();
        assert_eq!(rec.snapshots.len(), 3);
        for s in &rec.snapshots {
            s.rho.validate().unwrap();
        }
    }

    #[test]
    fn oversized_step_rejected() {
        let (m, ch) = spin_setup();
        let rho0 = DensityOperator::maximally_mixed(2);
        let err = evolve_sme(&m, &ch, &rho0, &SmeOptions::new(2.0, 10.0), 1).unwrap_err();
        assert!(matches!(err, HeterodyneError::Lindblad(LindbladError::StepSize { .. })));
    }
}
