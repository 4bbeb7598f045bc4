use serde_json::json;

use super::config::{QvdpLcParams, QvdpTrajParams, QvdpTwoParams};
use super::{linspace, tag, Column, ExperimentError, RunContext, Table};
use crate::classical::HistogramDist;
use crate::heterodyne::{
    ensemble_mean, evolve_sme_ensemble, measured_phase_distribution, measured_spectrum, HeterodyneRecord,
    MeasuredSpectrumOptions, MonitoredChannel, SmeOptions,
};
use crate::lindblad::{
    build_qvdp_model, build_two_qvdp_model, correlation_spectrum, evolve_expectations, evolve_me_with, steady_state,
    Liouvillian, LindbladModel, QvdpParams, SteadyState, SteadyStateOptions, TwoQvdpParams,
};
use crate::linalg::{coherent_ket, fock_operators, tensor, DensityOperator, Operator, C64};
use crate::phase_space::{husimi_q_boson, phase_diff_dist_boson, phase_dist_boson, PhaseDistribution, PhaseGrid, QSurface};
use crate::rng::stream_seed;
use crate::spectral::{uniform_grid, LagWindow, SpectrumSeries};

/// Steady state with the truncation check routed through the run warnings.
pub(super) fn checked_steady_state(l: &Liouvillian, what: &str, ctx: &mut RunContext) -> Result<SteadyState, ExperimentError> {
    let ss = steady_state(l, &SteadyStateOptions::default())?;
    if let Some(tr) = ss.truncation.as_ref().filter(|t| t.warning) {
        ctx.warn(format!("{what}: top-two Fock populations {:?} exceed the truncation limit", tr.top_two_populations))?;
    }
    Ok(ss)
}

pub(super) fn steady_meta(ss: &SteadyState) -> serde_json::Value {
    json!({
        "method": ss.method,
        "residual": ss.residual,
        "integration_time": ss.integration_time,
        "truncation": ss.truncation,
    })
}

pub(super) fn q_surface_table(q: &QSurface, xs: &[f64], ps: &[f64], names: (&str, &str)) -> Table {
    let mut t = Table::new(vec![Column::new(names.0, ""), Column::new(names.1, ""), Column::new("Q", "")]);
    for (i, x) in xs.iter().enumerate() {
        for (j, p) in ps.iter().enumerate() {
            t.push(vec![*x, *p, q.get(i, j)]);
        }
    }
    t
}

pub(super) fn phase_dist_table(d: &PhaseDistribution, name: &str) -> Table {
    let mut t = Table::new(vec![Column::new(name, "rad"), Column::new("Q", "1/rad")]);
    for (p, v) in d.phis.iter().zip(&d.values) {
        t.push(vec![*p, *v]);
    }
    t
}

pub(super) fn histogram_table(h: &HistogramDist, name: &str) -> Table {
    let mut t = Table::new(vec![Column::new(name, "rad"), Column::new("P", "1/rad"), Column::new("P_se", "1/rad")]);
    let width = std::f64::consts::TAU / h.n_bins() as f64;
    let se = h.std_errors.clone().unwrap_or_else(|| vec![f64::NAN; h.n_bins()]);
    for ((c, d), s) in h.bin_centers(0).into_iter().zip(h.density()).zip(se) {
        t.push(vec![c, d, s / width]);
    }
    t
}

/// ρ(t) at each requested time of one RK4 run with step `dt`.
pub(super) fn states_at(
    l: &Liouvillian,
    rho0: &DensityOperator,
    dt: f64,
    times: &[f64],
) -> Result<Vec<DensityOperator>, ExperimentError> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let mut found: Vec<Option<DensityOperator>> = vec![None; times.len()];
    evolve_me_with(l, rho0, dt, t_max, 1, |t, rho| {
        for (slot, &ts) in found.iter_mut().zip(times) {
            if slot.is_none() && (t - ts).abs() <= 0.5 * dt {
                *slot = Some(rho.clone());
            }
        }
        Ok(())
    })?;
    found
        .into_iter()
        .zip(times)
        .map(|(s, t)| s.ok_or_else(|| ExperimentError::InvalidConfig(format!("time {t} not reached"))))
        .collect()
}

/// Dense grid for window averaging around `omegas` with width `width`.
pub(super) fn fine_grid(omegas: &[f64], width: f64) -> Vec<f64> {
    let lo = omegas.iter().cloned().fold(f64::INFINITY, f64::min) - width;
    let hi = omegas.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + width;
    let n = ((hi - lo) / (width / 40.0)).ceil() as usize + 1;
    uniform_grid(lo, hi, n)
}

/// κS(ω) + 1 window-averaged like the measured periodogram.
pub(super) fn predicted_current_spectrum(
    l: &Liouvillian,
    rho: &DensityOperator,
    lowering: &Operator,
    rate: f64,
    tau_max: f64,
    d_tau: f64,
    omegas: &[f64],
    width: f64,
) -> Result<(SpectrumSeries, bool), ExperimentError> {
    let fine = fine_grid(omegas, width);
    let (s, corr) = correlation_spectrum(l, rho, &lowering.adjoint(), lowering, tau_max, d_tau, &fine, LagWindow::Auto)?;
    let shifted = SpectrumSeries::new(fine, s.values.iter().map(|v| rate * v + 1.0).collect(), s.method)?;
    Ok((shifted.window_average(omegas, width)?, corr.tail_flagged))
}

pub(super) fn segment_samples(segment_time: f64, sample_dt: f64) -> usize {
    ((segment_time / sample_dt).round() as usize).max(2)
}

pub(super) fn spectrum_table(omegas: &[f64], unit: &str, cols: &[(&str, &[f64])]) -> Table {
    let t_unit = format!("1/{unit}");
    let mut columns = vec![Column::new("omega", unit)];
    columns.extend(cols.iter().map(|(n, _)| Column::new(*n, &t_unit)));
    let mut t = Table::new(columns);
    for (k, w) in omegas.iter().enumerate() {
        let mut row = vec![*w];
        row.extend(cols.iter().map(|(_, v)| v[k]));
        t.push(row);
    }
    t
}

fn qvdp(p_omega: f64, kappa1: f64, kappa2: f64, kappa: f64) -> QvdpParams {
    QvdpParams { omega: p_omega, kappa1, kappa2, kappa }
}

fn coherent_rho(alpha: [f64; 2], n_max: usize, ctx: &mut RunContext) -> Result<DensityOperator, ExperimentError> {
    let c = coherent_ket(C64::new(alpha[0], alpha[1]), n_max)?;
    if c.truncation_warning {
        ctx.warn(format!("coherent initial state loses {:.2e} of its norm at n_max = {n_max}", c.tail_weight))?;
    }
    Ok(DensityOperator::from_ket(&c.ket))
}

pub(super) fn run_lc(p: &QvdpLcParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let qp = qvdp(p.omega, p.kappa1, p.kappa2, p.kappa);
    let l = Liouvillian::new(&build_qvdp_model(&qp, p.n_max)?);
    let rho0 = coherent_rho(p.alpha0, p.n_max, ctx)?;
    let xs = linspace(-p.xy_half_width, p.xy_half_width, p.xy_points);
    let grid = PhaseGrid::new(p.n_phi)?;
    let states = states_at(&l, &rho0, p.dt, &p.times)?;
    let mut qphi = Table::new(
        std::iter::once(Column::new("phi", "rad"))
            .chain(p.times.iter().map(|t| Column::new(format!("Q_t{}", tag(*t)), "1/rad")))
            .collect(),
    );
    let dists: Vec<PhaseDistribution> = states.iter().map(|r| phase_dist_boson(r, &grid)).collect::<Result<_, _>>()?;
    for (k, phi) in grid.phis().iter().enumerate() {
        qphi.push(std::iter::once(*phi).chain(dists.iter().map(|d| d.values[k])).collect());
    }
    let mut outside = false;
    for (k, (rho, t)) in states.iter().zip(&p.times).enumerate() {
        let q = husimi_q_boson(rho, &xs, &xs)?;
        outside |= q.truncation_warning;
        let n = rho.expect(&fock_operators(p.n_max)?.n).re;
        ctx.out.write_table(&format!("q_xy_{k}"), &q_surface_table(&q, &xs, &xs, ("x", "p")), json!({ "t": t, "mean_n": n }))?;
    }
    ctx.out.write_table("q_phi", &qphi, json!({ "times": p.times, "params": qp, "n_max": p.n_max }))?;
    if outside {
        ctx.warn("Q(x,p) grid extends beyond the trusted coherent-state radius")?;
    }

    let ss = checked_steady_state(&l, "qvdp steady state", ctx)?;
    let q = husimi_q_boson(&ss.rho, &xs, &xs)?;
    ctx.out.write_table("q_xy_steady", &q_surface_table(&q, &xs, &xs, ("x", "p")), steady_meta(&ss))?;
    let d = phase_dist_boson(&ss.rho, &grid)?;
    ctx.out.write_table(
        "q_phi_steady",
        &phase_dist_table(&d, "phi"),
        json!({ "max_deviation_from_flat": d.max_deviation_from_flat(), "steady": steady_meta(&ss) }),
    )?;
    Ok(())
}

pub(super) fn run_traj(p: &QvdpTrajParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let unit = p.unit.as_str();
    let t_unit = format!("1/{unit}");
    let qp = qvdp(p.omega, p.kappa1, p.kappa2, p.kappa);
    let model = build_qvdp_model(&qp, p.n_max)?;
    let l = Liouvillian::new(&model);
    let ch = MonitoredChannel::from_jump(&model, "a")?;
    let a = fock_operators(p.n_max)?.a;
    let rho0 = coherent_rho(p.alpha0, p.n_max, ctx)?;

    let opts = SmeOptions::new(p.dt, p.t_final).with_sample_every(p.sample_every).with_snapshots(vec![p.t_final]);
    let records = evolve_sme_ensemble(&model, std::slice::from_ref(&ch), &rho0, &opts, p.seed, p.n_traj)?;
    let mean = ensemble_mean(&records, |r| r.cond_expectations[0].clone())?;
    let me = evolve_expectations(&l, &rho0, p.dt, p.t_final, p.sample_every, std::slice::from_ref(&a))?;

    let mut mt = Table::new(vec![
        Column::new("t", &t_unit),
        Column::new("me_x", ""),
        Column::new("me_p", ""),
        Column::new("sme_mean_x", ""),
        Column::new("sme_se_x", ""),
        Column::new("sme_mean_p", ""),
        Column::new("sme_se_p", ""),
    ]);
    for (k, t) in mean.times.iter().enumerate() {
        let m = me.values[0][k];
        mt.push(vec![*t, m.re, m.im, mean.mean[k].re, mean.se_re[k], mean.mean[k].im, mean.se_im[k]]);
    }
    ctx.out.write_table("unraveling", &mt, json!({ "n_traj": p.n_traj, "observable": "<a> = x + i p", "dt": p.dt }))?;
    ctx.out.write_table("trajectories", &traj_table(&records, p.n_shown, &t_unit, 0), json!({ "seed": p.seed }))?;

    let xs = linspace(-p.xy_half_width, p.xy_half_width, p.xy_points);
    if let Some(snap) = records.first().and_then(|r| r.snapshots.first()) {
        let q = husimi_q_boson(&snap.rho, &xs, &xs)?;
        ctx.out.write_table("q_xy_conditional", &q_surface_table(&q, &xs, &xs, ("x", "p")), json!({ "t": snap.t, "trajectory": 0 }))?;
    }

    // current spectrum in the steady state
    let ss = checked_steady_state(&l, "qvdp steady state", ctx)?;
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
    let (predicted, tail) = predicted_current_spectrum(&l, &ss.rho, &a, p.kappa, p.tau_max, p.d_tau, &omegas, p.window_width)?;
    if tail {
        ctx.warn("regression correlation has not decayed at tau_max")?;
    }
    let k = predicted.peak_index();
    ctx.out.write_table(
        "current_spectrum",
        &spectrum_table(&omegas, unit, &[("measured", &measured.values), ("kappa_S_plus_1", &predicted.values)]),
        json!({
            "n_traj": p.spectrum_n_traj,
            "options": mopts,
            "peak_omega": omegas[k],
            "peak_ratio": measured.values[k] / predicted.values[k],
            "steady": steady_meta(&ss),
        }),
    )?;
    Ok(())
}

/// First `n` conditional trajectories of ⟨L⟩ for channel `ch`.
pub(super) fn traj_table(records: &[HeterodyneRecord], n: usize, t_unit: &str, ch: usize) -> Table {
    let mut t = Table::new(vec![
        Column::new("traj", ""),
        Column::new("t", t_unit),
        Column::new("re", ""),
        Column::new("im", ""),
    ]);
    for (i, r) in records.iter().take(n).enumerate() {
        for (time, v) in r.times.iter().zip(&r.cond_expectations[ch]) {
            t.push(vec![i as f64, *time, v.re, v.im]);
        }
    }
    t
}

fn two_model(p: &QvdpTwoParams, delta: f64, v: f64, n_max: usize) -> Result<LindbladModel, ExperimentError> {
    let tp = TwoQvdpParams { delta, v, kappa1: p.kappa1, kappa2: p.kappa2, kappa: p.kappa };
    Ok(build_two_qvdp_model(&tp, n_max)?)
}

/// Max Q(φ_AB) of the steady state and whether the truncation was flagged.
pub(super) fn qvdp_two_max_q(p: &QvdpTwoParams, delta: f64, v: f64, n_max: usize, n_phi: usize) -> Result<(f64, bool), ExperimentError> {
    let l = Liouvillian::new(&two_model(p, delta, v, n_max)?);
    let ss = steady_state(&l, &SteadyStateOptions::default())?;
    let d = phase_diff_dist_boson(&ss.rho, &PhaseGrid::new(n_phi)?)?;
    Ok((d.max_value(), ss.truncation.is_some_and(|t| t.warning)))
}

pub(super) fn measured_two(
    model: &LindbladModel,
    labels: (&str, &str),
    rho: &DensityOperator,
    opts: &SmeOptions,
    seed: u64,
    n_traj: usize,
) -> Result<Vec<HeterodyneRecord>, ExperimentError> {
    let chs = [MonitoredChannel::from_jump(model, labels.0)?, MonitoredChannel::from_jump(model, labels.1)?];
    Ok(evolve_sme_ensemble(model, &chs, rho, opts, seed, n_traj)?)
}

pub(super) fn run_two(p: &QvdpTwoParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let unit = p.unit.as_str();
    let grid = PhaseGrid::new(p.n_phi)?;
    let labels = ("a", "b");

    // phase locking: Q(φ_AB) and the current-based estimate
    for (i, &v) in p.lock_v.iter().enumerate() {
        let l = Liouvillian::new(&two_model(p, p.lock_delta, v, p.n_max)?);
        let ss = checked_steady_state(&l, &format!("two qvdp steady state (V = {v})"), ctx)?;
        let d = phase_diff_dist_boson(&ss.rho, &grid)?;
        ctx.out.write_table(
            &format!("q_phi_ab_V{}", tag(v)),
            &phase_dist_table(&d, "phi_AB"),
            json!({ "delta": p.lock_delta, "V": v, "n_max": p.n_max, "max": d.max_value(), "argmax": d.argmax_phi(), "steady": steady_meta(&ss) }),
        )?;

        let sm = two_model(p, p.lock_delta, v, p.sme_n_max)?;
        let sl = Liouvillian::new(&sm);
        let sss = checked_steady_state(&sl, &format!("two qvdp steady state at sme_n_max (V = {v})"), ctx)?;
        let opts = SmeOptions::new(p.sme_dt, p.sme_t_final).with_sample_every(p.sme_sample_every);
        let recs = measured_two(&sm, labels, &sss.rho, &opts, stream_seed(p.seed, i as u64), p.sme_n_traj)?;
        let h = measured_phase_distribution(&recs, (0, 1), p.tau_f, p.sme_t_min, p.phase_bins)?;
        ctx.out.write_table(
            &format!("measured_phi_ab_V{}", tag(v)),
            &histogram_table(&h, "phi_AB"),
            json!({ "tau_f": p.tau_f, "t_min": p.sme_t_min, "n_traj": p.sme_n_traj, "n_max": p.sme_n_max, "skipped": h.skipped }),
        )?;
    }

    // entrainment: regression spectra and current spectra
    let omegas = uniform_grid(p.omega_min, p.omega_max, p.n_omega);
    let width = p.spectra_delta.abs() / 10.0;
    let f = fock_operators(p.n_max)?;
    let id = Operator::identity(p.n_max + 1);
    let (a, b) = (tensor(&f.a, &id), tensor(&id, &f.a));
    for (i, &v) in p.spectra_v.iter().enumerate() {
        let l = Liouvillian::new(&two_model(p, p.spectra_delta, v, p.n_max)?);
        let ss = checked_steady_state(&l, &format!("two qvdp steady state (V = {v})"), ctx)?;
        let (sa, ca) = correlation_spectrum(&l, &ss.rho, &a.adjoint(), &a, p.tau_max, p.d_tau, &omegas, LagWindow::Auto)?;
        let (sb, cb) = correlation_spectrum(&l, &ss.rho, &b.adjoint(), &b, p.tau_max, p.d_tau, &omegas, LagWindow::Auto)?;
        if ca.tail_flagged || cb.tail_flagged {
            ctx.warn(format!("regression correlation has not decayed at tau_max (V = {v})"))?;
        }

        let sm = two_model(p, p.spectra_delta, v, p.sme_n_max)?;
        let sss = checked_steady_state(&Liouvillian::new(&sm), &format!("two qvdp steady state at sme_n_max (V = {v})"), ctx)?;
        let opts = SmeOptions::new(p.sme_dt, p.spectrum_t_final).with_sample_every(p.sme_sample_every);
        let recs = measured_two(&sm, labels, &sss.rho, &opts, stream_seed(p.seed, 100 + i as u64), p.spectrum_n_traj)?;
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
                &[("S_A", &sa.values), ("S_B", &sb.values), ("current_A", &ma.values), ("current_B", &mb.values)],
            ),
            json!({
                "delta": p.spectra_delta,
                "V": v,
                "peak_A": sa.peak_frequency(),
                "peak_B": sb.peak_frequency(),
                "peak_separation": (sa.peak_frequency() - sb.peak_frequency()).abs(),
                "current_window": width,
                "current_n_max": p.sme_n_max,
                "steady": steady_meta(&ss),
            }),
        )?;
    }
    Ok(())
}
