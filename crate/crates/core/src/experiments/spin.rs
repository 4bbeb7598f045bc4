use std::f64::consts::{PI, TAU};

use serde_json::json;

use super::config::{SpinLcParams, SpinTrajParams, SpinTwoParams};
use super::quantum::{
    checked_steady_state, histogram_table, measured_two, phase_dist_table, predicted_current_spectrum,
    q_surface_table, segment_samples, spectrum_table, states_at, steady_meta, traj_table,
};
use super::{linspace, tag, Column, ExperimentError, RunContext, Table};
use crate::heterodyne::{
    ensemble_mean, evolve_sme_ensemble, measured_phase_distribution, measured_spectrum, MeasuredSpectrumOptions,
    MonitoredChannel, SmeOptions,
};
use crate::lindblad::{
    build_spin_model, build_two_spin_model, correlation_spectrum, evolve_expectations, steady_state, Liouvillian,
    SpinParams, SteadyStateOptions, TwoSpinParams,
};
use crate::linalg::{pauli_operators, spin_coherent_ket, tensor, DensityOperator, Operator};
use crate::phase_space::{husimi_q_spin, phase_diff_dist_spins, phase_dist_spin, PhaseDistribution, PhaseGrid};
use crate::rng::stream_seed;
use crate::spectral::{uniform_grid, LagWindow};

fn sphere_axes(n_theta: usize, n_phi: usize) -> (Vec<f64>, Vec<f64>) {
    (linspace(0.0, PI, n_theta), (0..n_phi).map(|k| TAU * k as f64 / n_phi as f64).collect())
}

/// Lag range long enough for the spin correlations to decay below 1e-12.
fn spin_tau_max(gamma_plus: f64, gamma_minus: f64) -> f64 {
    60.0 / (gamma_plus + gamma_minus)
}

pub(super) fn run_lc(p: &SpinLcParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let sp = SpinParams { omega: p.omega, gamma_plus: p.gamma_plus, gamma_minus: p.gamma_minus };
    let l = Liouvillian::new(&build_spin_model(&sp)?);
    let rho0 = DensityOperator::from_ket(&spin_coherent_ket(p.theta0, p.phi0)?);
    let (thetas, phis) = sphere_axes(p.n_theta, p.n_phi_sphere);
    let grid = PhaseGrid::new(p.n_phi)?;
    let states = states_at(&l, &rho0, p.dt, &p.times)?;
    let sz = pauli_operators().sz;

    let dists: Vec<PhaseDistribution> = states.iter().map(|r| phase_dist_spin(r, &grid)).collect::<Result<_, _>>()?;
    let mut qphi = Table::new(
        std::iter::once(Column::new("phi", "rad"))
            .chain(p.times.iter().map(|t| Column::new(format!("Q_t{}", tag(*t)), "1/rad")))
            .collect(),
    );
    for (k, phi) in grid.phis().iter().enumerate() {
        qphi.push(std::iter::once(*phi).chain(dists.iter().map(|d| d.values[k])).collect());
    }
    for (k, (rho, t)) in states.iter().zip(&p.times).enumerate() {
        let q = husimi_q_spin(rho, &thetas, &phis)?;
        ctx.out.write_table(
            &format!("q_sphere_{k}"),
            &q_surface_table(&q, &thetas, &phis, ("theta", "phi")),
            json!({ "t": t, "sigma_z": rho.expect(&sz).re }),
        )?;
    }
    ctx.out.write_table("q_phi", &qphi, json!({ "times": p.times, "params": sp }))?;

    let ss = checked_steady_state(&l, "spin steady state", ctx)?;
    let q = husimi_q_spin(&ss.rho, &thetas, &phis)?;
    ctx.out.write_table("q_sphere_steady", &q_surface_table(&q, &thetas, &phis, ("theta", "phi")), steady_meta(&ss))?;
    let d = phase_dist_spin(&ss.rho, &grid)?;
    ctx.out.write_table(
        "q_phi_steady",
        &phase_dist_table(&d, "phi"),
        json!({ "max_deviation_from_flat": d.max_deviation_from_flat(), "sigma_z": ss.rho.expect(&sz).re }),
    )?;
    Ok(())
}

pub(super) fn run_traj(p: &SpinTrajParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let unit = p.unit.as_str();
    let t_unit = format!("1/{unit}");
    let sp = SpinParams { omega: p.omega, gamma_plus: p.gamma_plus, gamma_minus: p.gamma_minus };
    let model = build_spin_model(&sp)?;
    let l = Liouvillian::new(&model);
    let ch = MonitoredChannel::from_jump(&model, "sigma_minus")?;
    let sm = pauli_operators().sm;
    let rho0 = DensityOperator::from_ket(&spin_coherent_ket(p.theta0, p.phi0)?);

    let opts = SmeOptions::new(p.dt, p.t_final).with_sample_every(p.sample_every);
    let records = evolve_sme_ensemble(&model, std::slice::from_ref(&ch), &rho0, &opts, p.seed, p.n_traj)?;
    // σ^x = σ⁺ + σ⁻ = 2 Re σ⁻
    let mean = ensemble_mean(&records, |r| r.cond_expectations[0].iter().map(|v| v * 2.0).collect())?;
    let me = evolve_expectations(&l, &rho0, p.dt, p.t_final, p.sample_every, std::slice::from_ref(&sm))?;
    let mut mt = Table::new(vec![
        Column::new("t", &t_unit),
        Column::new("me_sigma_x", ""),
        Column::new("me_sigma_y", ""),
        Column::new("sme_mean_sigma_x", ""),
        Column::new("sme_se_sigma_x", ""),
        Column::new("sme_mean_sigma_y", ""),
        Column::new("sme_se_sigma_y", ""),
    ]);
    for (k, t) in mean.times.iter().enumerate() {
        let m = me.values[0][k] * 2.0;
        // 2⟨σ⁻⟩ = ⟨σ^x⟩ + i⟨σ^y⟩
        mt.push(vec![*t, m.re, m.im, mean.mean[k].re, mean.se_re[k], mean.mean[k].im, mean.se_im[k]]);
    }
    ctx.out.write_table("unraveling", &mt, json!({ "n_traj": p.n_traj, "dt": p.dt }))?;
    ctx.out.write_table("trajectories", &traj_table(&records, p.n_shown, &t_unit, 0), json!({ "observable": "<sigma_minus>" }))?;

    let ss = checked_steady_state(&l, "spin steady state", ctx)?;
    let sopts = SmeOptions::new(p.dt, p.spectrum_t_final).with_sample_every(p.spectrum_sample_every);
    let srecs = evolve_sme_ensemble(&model, std::slice::from_ref(&ch), &ss.rho, &sopts, stream_seed(p.seed, 1), p.spectrum_n_traj)?;
    let omegas = uniform_grid(p.omega_min, p.omega_max, p.n_omega);
    let mopts = MeasuredSpectrumOptions {
        t_min: 0.0,
        segment_samples: segment_samples(p.segment_time, srecs[0].sample_dt()),
        window_width: p.window_width,
    };
    let measured = measured_spectrum(&srecs, 0, &omegas, &mopts)?;
    if measured.values.iter().any(|v| v.is_nan()) {
        ctx.warn("some spectrum windows contain no periodogram frequency; lengthen segment_time or widen window_width")?;
    }
    let tau_max = spin_tau_max(p.gamma_plus, p.gamma_minus);
    let (predicted, _) =
        predicted_current_spectrum(&l, &ss.rho, &sm, p.gamma_minus, tau_max, 0.01, &omegas, p.window_width)?;
    ctx.out.write_table(
        "current_spectrum",
        &spectrum_table(&omegas, unit, &[("measured", &measured.values), ("gamma_minus_S_plus_1", &predicted.values)]),
        json!({ "n_traj": p.spectrum_n_traj, "options": mopts }),
    )?;
    Ok(())
}

fn two_spin(p: &SpinTwoParams, delta: f64, v: f64) -> TwoSpinParams {
    TwoSpinParams { delta, v, gamma_plus: p.gamma_plus, gamma_minus: p.gamma_minus }
}

/// Max Q(φ_AB) of the two-spin steady state.
pub(super) fn spin_two_max_q(p: &SpinTwoParams, delta: f64, v: f64, n_phi: usize) -> Result<f64, ExperimentError> {
    let l = Liouvillian::new(&build_two_spin_model(&two_spin(p, delta, v))?);
    let ss = steady_state(&l, &SteadyStateOptions::default())?;
    Ok(phase_diff_dist_spins(&ss.rho, &PhaseGrid::new(n_phi)?)?.max_value())
}

pub(super) fn run_two(p: &SpinTwoParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let unit = p.unit.as_str();
    let grid = PhaseGrid::new(p.n_phi)?;
    let labels = ("sigma_minus_A", "sigma_minus_B");
    for (i, &v) in p.lock_v.iter().enumerate() {
        let model = build_two_spin_model(&two_spin(p, p.lock_delta, v))?;
        let l = Liouvillian::new(&model);
        let ss = checked_steady_state(&l, "two-spin steady state", ctx)?;
        let d = phase_diff_dist_spins(&ss.rho, &grid)?;
        let coherence = ss.rho.matrix()[(1, 2)];
        ctx.out.write_table(
            &format!("q_phi_ab_V{}", tag(v)),
            &phase_dist_table(&d, "phi_AB"),
            json!({
                "delta": p.lock_delta,
                "V": v,
                "max": d.max_value(),
                "argmax": d.argmax_phi(),
                "bound": 1.0 / TAU + PI / 32.0,
                "coherence_re": coherence.re,
                "coherence_im": coherence.im,
            }),
        )?;
        let opts = SmeOptions::new(p.sme_dt, p.sme_t_final).with_sample_every(p.sme_sample_every);
        let recs = measured_two(&model, labels, &ss.rho, &opts, stream_seed(p.seed, i as u64), p.sme_n_traj)?;
        let h = measured_phase_distribution(&recs, (0, 1), p.tau_f, p.sme_t_min, p.phase_bins)?;
        ctx.out.write_table(
            &format!("measured_phi_ab_V{}", tag(v)),
            &histogram_table(&h, "phi_AB"),
            json!({ "tau_f": p.tau_f, "t_min": p.sme_t_min, "n_traj": p.sme_n_traj, "skipped": h.skipped }),
        )?;
    }

    let omegas = uniform_grid(p.omega_min, p.omega_max, p.n_omega);
    let s = pauli_operators();
    let id = Operator::identity(2);
    let (sm_a, sm_b) = (tensor(&s.sm, &id), tensor(&id, &s.sm));
    let width = p.spectra_delta.abs() / 10.0;
    for (i, &v) in p.spectra_v.iter().enumerate() {
        let model = build_two_spin_model(&two_spin(p, p.spectra_delta, v))?;
        let l = Liouvillian::new(&model);
        let ss = checked_steady_state(&l, "two-spin steady state", ctx)?;
        let (sa, ca) = correlation_spectrum(&l, &ss.rho, &sm_a.adjoint(), &sm_a, p.tau_max, p.d_tau, &omegas, LagWindow::Auto)?;
        let (sb, cb) = correlation_spectrum(&l, &ss.rho, &sm_b.adjoint(), &sm_b, p.tau_max, p.d_tau, &omegas, LagWindow::Auto)?;
        if ca.tail_flagged || cb.tail_flagged {
            ctx.warn(format!("regression correlation has not decayed at tau_max (V = {v})"))?;
        }
        let (na, nb) = (sa.normalized_to_max(), sb.normalized_to_max());

        let opts = SmeOptions::new(p.sme_dt, p.spectrum_t_final).with_sample_every(p.sme_sample_every);
        let recs = measured_two(&model, labels, &ss.rho, &opts, stream_seed(p.seed, 100 + i as u64), p.spectrum_n_traj)?;
        let mopts = MeasuredSpectrumOptions {
            t_min: 0.0,
            segment_samples: segment_samples(p.segment_time, recs[0].sample_dt()),
            window_width: width,
        };
        let ma = measured_spectrum(&recs, 0, &omegas, &mopts)?;
        let mb = measured_spectrum(&recs, 1, &omegas, &mopts)?;
        ctx.out.write_table(
            &format!("spectra_V{}", tag(v)),
            &spectrum_table(
                &omegas,
                unit,
                &[
                    ("S_A", &sa.values),
                    ("S_B", &sb.values),
                    ("S_A_norm", &na.values),
                    ("S_B_norm", &nb.values),
                    ("current_A", &ma.values),
                    ("current_B", &mb.values),
                ],
            ),
            json!({
                "delta": p.spectra_delta,
                "V": v,
                "peak_A": sa.peak_frequency(),
                "peak_B": sb.peak_frequency(),
                "current_window": width,
                "current_n_traj": p.spectrum_n_traj,
            }),
        )?;
    }
    Ok(())
}
