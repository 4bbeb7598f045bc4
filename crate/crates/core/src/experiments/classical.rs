use serde_json::json;

use super::config::{ClassicalLcParams, ClassicalTwoParams};
use super::{linspace, tag, Column, ExperimentError, RunContext, Table};
use crate::classical::{
    classical_spectrum, histogram_phase, histogram_radius, histogram_xy, observed_frequency_difference,
    simulate_coupled_phases, simulate_vdp, ClassicalSpectrumOptions, CoupledPhaseParams, HistogramDist,
    HistogramDomain, InitialPhases, IntegrationSpec, PhaseSource, TrajectoryRecord, TrajectoryValues, VdpParams,
    XyGrid,
};
use crate::linalg::C64;
use crate::rng::stream_seed;
use crate::spectral::{fit_lorentzian, uniform_grid, LagWindow, SpectrumSeries};

fn amplitudes(tr: &TrajectoryRecord) -> &[C64] {
    match &tr.values {
        TrajectoryValues::Amplitude(a) => a,
        _ => unreachable!("simulate_vdp records amplitudes"),
    }
}

fn snapshot_index(tr: &TrajectoryRecord, t: f64) -> usize {
    ((t / tr.sample_dt).round() as usize).min(tr.times.len() - 1)
}

fn phase_table(h: &HistogramDist, name: &str, unit: &str) -> Table {
    let mut t = Table::new(vec![Column::new(name, "rad"), Column::new("P", unit), Column::new("P_se", unit)]);
    let width = std::f64::consts::TAU / h.n_bins() as f64;
    let se = h.std_errors.clone().unwrap_or_else(|| vec![f64::NAN; h.n_bins()]);
    for ((c, d), s) in h.bin_centers(0).into_iter().zip(h.density()).zip(se) {
        t.push(vec![c, d, s / width]);
    }
    t
}

pub(super) fn run_lc(p: &ClassicalLcParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let unit = p.unit.as_str();
    let t_unit = format!("1/{unit}");
    let vdp = VdpParams { kappa1: p.kappa1, kappa2: p.kappa2, omega: p.omega, sigma2: p.sigma2 };
    vdp.validate()?;
    let noiseless = VdpParams { sigma2: 0.0, ..vdp };
    let meta = json!({ "r0": vdp.r0(), "params": vdp });

    // limit cycle from several initial conditions
    let mut det = Table::new(vec![
        Column::new("curve", ""),
        Column::new("t", &t_unit),
        Column::new("x", ""),
        Column::new("p", ""),
    ]);
    for (i, a0) in p.deterministic_alpha0.iter().enumerate() {
        let spec = IntegrationSpec::new(p.dt, p.deterministic_t_final, 1, p.seed).with_sample_every(p.sample_every);
        let tr = simulate_vdp(&noiseless, C64::new(a0[0], a0[1]), &spec, InitialPhases::Fixed)?;
        for (t, a) in tr[0].times.iter().zip(amplitudes(&tr[0])) {
            det.push(vec![i as f64, *t, a.re, a.im]);
        }
    }
    ctx.out.write_table("deterministic", &det, meta.clone())?;

    let alpha0 = C64::new(p.alpha0[0], p.alpha0[1]);
    let spec = IntegrationSpec::new(p.dt, p.t_final, p.n_traj, p.seed).with_sample_every(p.sample_every);
    let trajs = simulate_vdp(&vdp, alpha0, &spec, InitialPhases::Fixed)?;
    let reference = simulate_vdp(&noiseless, alpha0, &IntegrationSpec { n_traj: 1, ..spec }, InitialPhases::Fixed)?;

    let mut shown = Table::new(vec![
        Column::new("traj", ""),
        Column::new("t", &t_unit),
        Column::new("x", ""),
        Column::new("p", ""),
    ]);
    for (i, tr) in trajs.iter().take(p.n_shown).enumerate() {
        for (t, a) in tr.times.iter().zip(amplitudes(tr)) {
            shown.push(vec![i as f64, *t, a.re, a.im]);
        }
    }
    ctx.out.write_table("trajectories", &shown, json!({ "seed": p.seed, "dt": p.dt }))?;

    let n = trajs.len() as f64;
    let mut mean = Table::new(vec![
        Column::new("t", &t_unit),
        Column::new("mean_x", ""),
        Column::new("se_x", ""),
        Column::new("mean_p", ""),
        Column::new("se_p", ""),
        Column::new("noiseless_x", ""),
    ]);
    for (k, t) in trajs[0].times.iter().enumerate() {
        let (mut sx, mut sxx, mut sp, mut spp) = (0.0, 0.0, 0.0, 0.0);
        for tr in &trajs {
            let a = amplitudes(tr)[k];
            sx += a.re;
            sxx += a.re * a.re;
            sp += a.im;
            spp += a.im * a.im;
        }
        let (mx, mp) = (sx / n, sp / n);
        let se = |s2: f64, m: f64| ((s2 / n - m * m).max(0.0) / (n - 1.0).max(1.0)).sqrt();
        mean.push(vec![*t, mx, se(sxx, mx), mp, se(spp, mp), amplitudes(&reference[0])[k].re]);
    }
    ctx.out.write_table("ensemble_mean", &mean, json!({ "n_traj": p.n_traj }))?;

    let grid = XyGrid::square(p.xy_half_width, p.xy_bins);
    for (k, &ts) in p.snapshot_times.iter().enumerate() {
        let h = histogram_xy(&trajs, ts, &grid)?;
        let xs = h.bin_centers(0);
        let ps = h.bin_centers(1);
        let d = h.density();
        let mut t = Table::new(vec![Column::new("x", ""), Column::new("p", ""), Column::new("P", "")]);
        for (i, x) in xs.iter().enumerate() {
            for (j, pp) in ps.iter().enumerate() {
                t.push(vec![*x, *pp, d[i * ps.len() + j]]);
            }
        }
        ctx.out.write_table(&format!("pxy_{k}"), &t, json!({ "t": ts, "outside_grid": h.skipped }))?;

        let batches: Vec<Vec<f64>> = trajs.iter().map(|tr| vec![-amplitudes(tr)[snapshot_index(tr, ts)].arg()]).collect();
        let hp = HistogramDist::from_phase_batches(&batches, p.phase_bins, HistogramDomain::Phase)?;
        ctx.out.write_table(&format!("pphi_{k}"), &phase_table(&hp, "phi", "1/rad"), json!({ "t": ts }))?;
    }
    let t_last = *trajs[0].times.last().unwrap_or(&0.0);
    let r_max = 2.0 * vdp.r0() + 1.0;
    let hr = histogram_radius(&trajs, t_last, 50, r_max)?;
    let mut rt = Table::new(vec![Column::new("r", ""), Column::new("P", "")]);
    for (c, d) in hr.bin_centers(0).into_iter().zip(hr.density()) {
        rt.push(vec![c, d]);
    }
    ctx.out.write_table("radius_final", &rt, json!({ "t": t_last, "r0": vdp.r0() }))?;

    // stationary spectrum and its Lorentzian fit
    let sspec = IntegrationSpec::new(p.spectrum_dt, p.spectrum_t_final, p.spectrum_n_traj, stream_seed(p.seed, 1))
        .with_sample_every(p.spectrum_sample_every);
    let strajs = simulate_vdp(&vdp, C64::new(vdp.r0(), 0.0), &sspec, InitialPhases::Uniform)?;
    let omegas = uniform_grid(p.omega_min, p.omega_max, p.n_omega);
    let opts = ClassicalSpectrumOptions { max_lag: p.spectrum_max_lag, window: LagWindow::Auto };
    let s = classical_spectrum(&strajs, p.spectrum_t_min, &omegas, &opts)?.swap_remove(0);
    let fit = fit_lorentzian(&s, p.fit_half_window, false)?;
    let mut st = Table::new(vec![Column::new("omega", unit), Column::new("S", &t_unit), Column::new("fit", &t_unit)]);
    for (w, v) in s.omegas.iter().zip(&s.values) {
        st.push(vec![*w, *v, fit.eval(*w)]);
    }
    ctx.out.write_table(
        "spectrum",
        &st,
        json!({ "method": s.method.tag(), "fit": fit, "predicted_fwhm": vdp.linewidth(), "n_traj": p.spectrum_n_traj }),
    )?;
    Ok(())
}

fn phase_spec(p: &ClassicalTwoParams, n_traj: usize, t_final: f64, stream: u64) -> IntegrationSpec {
    IntegrationSpec::new(p.dt, t_final, n_traj, stream_seed(p.seed, stream)).with_sample_every(p.sample_every)
}

/// max P(φ_AB) of the stationary phase-difference histogram.
pub(super) fn classical_max_density(
    cp: &CoupledPhaseParams,
    spec: &IntegrationSpec,
    t_min: f64,
    n_bins: usize,
) -> Result<f64, ExperimentError> {
    let trajs = simulate_coupled_phases(cp, [0.0, 0.0], spec, InitialPhases::Uniform)?;
    Ok(histogram_phase(&trajs, PhaseSource::Difference, t_min, n_bins)?.max_density())
}

pub(super) fn run_two(p: &ClassicalTwoParams, ctx: &mut RunContext) -> Result<(), ExperimentError> {
    let unit = p.unit.as_str();
    let t_unit = format!("1/{unit}");

    // phase-difference distributions
    for (i, &v) in p.hist_v.iter().enumerate() {
        let cp = CoupledPhaseParams { delta: p.delta, v, sigma2: p.hist_sigma2 };
        let trajs = simulate_coupled_phases(&cp, [0.0, 0.0], &phase_spec(p, p.n_traj, p.t_final, i as u64), InitialPhases::Uniform)?;
        let h = histogram_phase(&trajs, PhaseSource::Difference, p.t_min, p.phase_bins)?;
        ctx.out.write_table(
            &format!("p_phi_ab_V{}", tag(v)),
            &phase_table(&h, "phi_AB", "1/rad"),
            json!({ "params": cp, "locking_phase": cp.locking_phase(), "t_min": p.t_min, "n_traj": p.n_traj }),
        )?;
    }

    // observed frequency difference
    let deltas = linspace(p.freq_delta[0], p.freq_delta[1], p.freq_n_delta);
    let mut cols = vec![Column::new("delta", unit), Column::new("noiseless_theory", unit)];
    cols.extend(p.freq_sigma2.iter().map(|s| Column::new(format!("observed_sigma2_{}", tag(*s)), unit)));
    let mut ft = Table::new(cols);
    for (i, &d) in deltas.iter().enumerate() {
        let mut row = vec![d, CoupledPhaseParams { delta: d, v: p.freq_v, sigma2: 0.0 }.beat_frequency()];
        for (j, &s2) in p.freq_sigma2.iter().enumerate() {
            let cp = CoupledPhaseParams { delta: d, v: p.freq_v, sigma2: s2 };
            let stream = 1000 + (i * p.freq_sigma2.len() + j) as u64;
            let trajs = simulate_coupled_phases(&cp, [0.0, 0.0], &phase_spec(p, p.freq_n_traj, p.freq_t_final, stream), InitialPhases::Uniform)?;
            row.push(observed_frequency_difference(&trajs, p.t_min)?);
        }
        ft.push(row);
    }
    ctx.out.write_table("observed_frequency", &ft, json!({ "V": p.freq_v, "t_min": p.t_min, "n_traj": p.freq_n_traj }))?;

    // spectra averaged in bins of width `bin_width`
    let fine = uniform_grid(p.omega_min, p.omega_max, p.n_omega);
    let centers = {
        let n = ((p.omega_max - p.omega_min) / p.bin_width).floor() as usize;
        (0..n).map(|k| p.omega_min + (k as f64 + 0.5) * p.bin_width).collect::<Vec<_>>()
    };
    for (i, &v) in p.spectrum_v.iter().enumerate() {
        let cp = CoupledPhaseParams { delta: p.delta, v, sigma2: p.spectrum_sigma2 };
        let trajs = simulate_coupled_phases(&cp, [0.0, 0.0], &phase_spec(p, p.spectrum_n_traj, p.t_final, 2000 + i as u64), InitialPhases::Uniform)?;
        let opts = ClassicalSpectrumOptions { max_lag: p.spectrum_max_lag, window: LagWindow::Auto };
        let raw = classical_spectrum(&trajs, p.t_min, &fine, &opts)?;
        let binned: Vec<SpectrumSeries> = raw.iter().map(|s| s.window_average(&centers, p.bin_width)).collect::<Result<_, _>>()?;
        let (na, nb) = (binned[0].normalized_to_max(), binned[1].normalized_to_max());
        let mut t = Table::new(vec![
            Column::new("omega", unit),
            Column::new("S_A", &t_unit),
            Column::new("S_B", &t_unit),
            Column::new("S_A_norm", ""),
            Column::new("S_B_norm", ""),
        ]);
        for k in 0..centers.len() {
            t.push(vec![centers[k], binned[0].values[k], binned[1].values[k], na.values[k], nb.values[k]]);
        }
        ctx.out.write_table(
            &format!("spectra_V{}", tag(v)),
            &t,
            json!({ "params": cp, "bin_width": p.bin_width, "peak_A": binned[0].peak_frequency(), "peak_B": binned[1].peak_frequency() }),
        )?;
    }
    Ok(())
}
