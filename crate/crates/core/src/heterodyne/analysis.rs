use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{HeterodyneError, HeterodyneRecord};
use crate::classical::{HistogramDist, HistogramDomain};
use crate::linalg::C64;
use crate::spectral::{periodogram, SpectralError, SpectrumMethod, SpectrumSeries};

/// Filtered currents below this magnitude carry no phase information.
const MIN_FILTERED_MAGNITUDE: f64 = 1e-12;

/// I = √r⟨L⟩_m + dZ/dt per channel, on the record's sample grid.
pub fn heterodyne_current(record: &HeterodyneRecord) -> Vec<Vec<C64>> {
    record
        .rates
        .iter()
        .zip(record.mean_expectations.iter().zip(&record.noise))
        .map(|(r, (m, w))| {
            let sr = r.sqrt();
            m.iter().zip(w).map(|(m, w)| m * sr + w).collect()
        })
        .collect()
}

/// Pointwise ensemble mean with standard errors of both quadratures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMean {
    pub times: Vec<f64>,
    pub mean: Vec<C64>,
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
    pub n_traj: usize,
}

fn check_grids(records: &[HeterodyneRecord]) -> Result<&HeterodyneRecord, HeterodyneError> {
    let first = records
        .first()
        .ok_or_else(|| HeterodyneError::InvalidArgument("no records".into()))?;
    if records.iter().any(|r| r.times.len() != first.times.len() || r.dt != first.dt || r.sample_every != first.sample_every) {
        return Err(HeterodyneError::RecordMismatch("records differ in time grid".into()));
    }
    Ok(first)
}

/// Mean and standard error over records of the series picked by `series`.
pub fn ensemble_mean<F>(records: &[HeterodyneRecord], series: F) -> Result<EnsembleMean, HeterodyneError>
where
    F: Fn(&HeterodyneRecord) -> Vec<C64>,
{
    let first = check_grids(records)?;
    let data: Vec<Vec<C64>> = records.iter().map(&series).collect();
    let n_t = first.times.len();
    if data.iter().any(|d| d.len() != n_t) {
        return Err(HeterodyneError::RecordMismatch("series length differs from the time grid".into()));
    }
    let m = records.len() as f64;
    let mut mean = vec![C64::new(0.0, 0.0); n_t];
    for d in &data {
        for (acc, v) in mean.iter_mut().zip(d) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let (mut se_re, mut se_im) = (vec![0.0; n_t], vec![0.0; n_t]);
    if records.len() > 1 {
        for d in &data {
            for i in 0..n_t {
                se_re[i] += (d[i].re - mean[i].re).powi(2);
                se_im[i] += (d[i].im - mean[i].im).powi(2);
            }
        }
        let norm = m * (m - 1.0);
        se_re.iter_mut().for_each(|v| *v = (*v / norm).sqrt());
        se_im.iter_mut().for_each(|v| *v = (*v / norm).sqrt());
    }
    Ok(EnsembleMean {
        times: first.times.clone(),
        mean,
        se_re,
        se_im,
        n_traj: records.len(),
    })
}

/// Ensemble mean of the current of `channel`.
pub fn ensemble_mean_current(records: &[HeterodyneRecord], channel: usize) -> Result<EnsembleMean, HeterodyneError> {
    check_channel(records, channel)?;
    ensemble_mean(records, |r| heterodyne_current(r).swap_remove(channel))
}

fn check_channel(records: &[HeterodyneRecord], channel: usize) -> Result<(), HeterodyneError> {
    if let Some(r) = records.iter().find(|r| channel >= r.n_channels()) {
        return Err(HeterodyneError::InvalidArgument(format!(
            "channel {channel} out of range ({} channels)",
            r.n_channels()
        )));
    }
    Ok(())
}

/// Single-pole low-pass Ī_k = a Ī_{k−1} + (1 − a) I_k, a = e^{−Δ/τ_f},
/// starting from Ī = 0.
pub fn filter_current(current: &[C64], sample_dt: f64, tau_f: f64) -> Vec<C64> {
    let a = (-sample_dt / tau_f).exp();
    let mut acc = C64::new(0.0, 0.0);
    current
        .iter()
        .map(|i| {
            acc = acc * a + i * (1.0 - a);
            acc
        })
        .collect()
}

/// φ_AB^m = arg(Ī_B/Ī_A) for samples at t ≥ t_min, and the number of
/// samples skipped because a filtered current vanished.
pub fn measured_phase_series(
    record: &HeterodyneRecord,
    channels: (usize, usize),
    tau_f: f64,
    t_min: f64,
) -> Result<(Vec<f64>, usize), HeterodyneError> {
    if !(tau_f > 0.0 && tau_f.is_finite()) {
        return Err(HeterodyneError::InvalidArgument(format!("tau_f must be positive, got {tau_f}")));
    }
    check_channel(std::slice::from_ref(record), channels.0.max(channels.1))?;
    let start = record
        .first_index_at(t_min)
        .ok_or(crate::classical::ClassicalError::EmptySampleSet { t_min })?;
    let currents = heterodyne_current(record);
    let fa = filter_current(&currents[channels.0], record.sample_dt(), tau_f);
    let fb = filter_current(&currents[channels.1], record.sample_dt(), tau_f);
    let mut phis = Vec::with_capacity(fa.len() - start);
    let mut skipped = 0;
    for (a, b) in fa[start..].iter().zip(&fb[start..]) {
        if a.norm() < MIN_FILTERED_MAGNITUDE || b.norm() < MIN_FILTERED_MAGNITUDE {
            skipped += 1;
        } else {
            phis.push((b / a).arg());
        }
    }
    Ok((phis, skipped))
}

/// Histogram of the measured phase difference over all records; each
/// record is one batch for the standard errors.
pub fn measured_phase_distribution(
    records: &[HeterodyneRecord],
    channels: (usize, usize),
    tau_f: f64,
    t_min: f64,
    n_bins: usize,
) -> Result<HistogramDist, HeterodyneError> {
    let mut batches = Vec::with_capacity(records.len());
    let mut skipped = 0;
    for r in records {
        let (phis, s) = measured_phase_series(r, channels, tau_f, t_min)?;
        batches.push(phis);
        skipped += s;
    }
    let mut h = HistogramDist::from_phase_batches(&batches, n_bins, HistogramDomain::PhaseDifference)?;
    h.skipped += skipped;
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSpectrumOptions {
    pub t_min: f64,
    /// Samples per periodogram segment.
    pub segment_samples: usize,
    /// Width of the frequency window averaged onto each output point; 0
    /// interpolates the raw averaged periodogram instead.
    pub window_width: f64,
}

/// Bartlett estimate of ∫dτ e^{−iωτ} E[I*(t+τ)I(t)]: periodograms of
/// non-overlapping segments of every record, averaged, then averaged over
/// windows centred on `omegas`.
pub fn measured_spectrum(
    records: &[HeterodyneRecord],
    channel: usize,
    omegas: &[f64],
    opts: &MeasuredSpectrumOptions,
) -> Result<SpectrumSeries, HeterodyneError> {
    let first = check_grids(records)?;
    check_channel(records, channel)?;
    let seg = opts.segment_samples;
    if seg < 2 {
        return Err(HeterodyneError::InvalidArgument("segments need at least 2 samples".into()));
    }
    let start = first
        .first_index_at(opts.t_min)
        .ok_or(crate::classical::ClassicalError::EmptySampleSet { t_min: opts.t_min })?;
    let available = first.times.len() - start;
    if available < seg {
        return Err(SpectralError::SegmentTooShort { available, required: seg }.into());
    }
    let n_seg = available / seg;
    let sample_dt = first.sample_dt();
    let mut planner = FftPlanner::new();
    let mut grid = Vec::new();
    let mut acc = vec![0.0; seg];
    for r in records {
        let current = heterodyne_current(r).swap_remove(channel);
        for s in 0..n_seg {
            let lo = start + s * seg;
            let (w, v) = periodogram(&current[lo..lo + seg], sample_dt, &mut planner);
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
            grid = w;
        }
    }
    let count = (records.len() * n_seg) as f64;
    acc.iter_mut().for_each(|a| *a /= count);
    let raw = SpectrumSeries::new(grid, acc, SpectrumMethod::CurrentPeriodogram)?;
    if opts.window_width > 0.0 {
        Ok(raw.window_average(omegas, opts.window_width)?)
    } else {
        let values = omegas.iter().map(|&w| raw.interpolate(w)).collect();
        Ok(SpectrumSeries::new(omegas.to_vec(), values, SpectrumMethod::CurrentPeriodogram)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(rate: f64, expect: Vec<C64>, noise: Vec<C64>, dt: f64) -> HeterodyneRecord {
        let n = expect.len();
        HeterodyneRecord {
            seed: 0,
            stream: 0,
            dt,
            sample_every: 1,
            rates: vec![rate],
            labels: vec!["a".into()],
            times: (0..n).map(|k| k as f64 * dt).collect(),
            cond_expectations: vec![expect.clone()],
            mean_expectations: vec![expect],
            noise: vec![noise],
            observables: vec![],
            snapshots: vec![],
        }
    }

    #[test]
    fn current_decomposes() {
        let e = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let w = vec![C64::new(0.1, 0.0), C64::new(0.0, -0.3)];
        let rec = synthetic(4.0, e.clone(), w.clone(), 0.1);
        let i = heterodyne_current(&rec);
        for k in 0..2 {
            assert!((i[0][k] - 2.0 * e[k] - w[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn filter_tracks_constant_input() {
        let x = vec![C64::new(2.0, -1.0); 2000];
        let f = filter_current(&x, 0.01, 0.5);
        assert!((f[1999] - x[0]).norm() < 1e-12);
        assert!((f[0] - x[0] * (1.0 - (-0.02f64).exp())).norm() < 1e-12);
    }

    #[test]
    fn tone_spectrum_peaks_at_its_frequency() {
        let dt = 0.05;
        let omega = 3.0;
        let e: Vec<C64> = (0..4096).map(|k| C64::from_polar(1.0, -omega * k as f64 * dt)).collect();
        let rec = synthetic(1.0, e, vec![C64::new(0.0, 0.0); 4096], dt);
        let omegas = crate::spectral::uniform_grid(-6.0, 6.0, 241);
        let s = measured_spectrum(
            &[rec],
            0,
            &omegas,
            &MeasuredSpectrumOptions { t_min: 0.0, segment_samples: 1024, window_width: 0.0 },
        )
        .unwrap();
        assert!((s.peak_frequency() - omega).abs() <= 0.05 + 1e-9);
    }

    #[test]
    fn short_segment_rejected() {
        let rec = synthetic(1.0, vec![C64::new(0.0, 0.0); 10], vec![C64::new(0.0, 0.0); 10], 0.1);
        let r = measured_spectrum(&[rec], 0, &[0.0, 1.0], &MeasuredSpectrumOptions { t_min: 0.0, segment_samples: 64, window_width: 0.0 });
        assert!(matches!(r, Err(HeterodyneError::Spectral(SpectralError::SegmentTooShort { .. }))));
    }
}
