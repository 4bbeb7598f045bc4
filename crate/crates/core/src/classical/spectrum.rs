use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ClassicalError, PhaseSource, TrajectoryRecord, TrajectoryValues};
use crate::linalg::C64;
use crate::spectral::{lag_sums, spectrum_from_correlation, LagWindow, SpectrumMethod, SpectrumSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSpectrumOptions {
    /// Largest correlation lag (time units).
    pub max_lag: f64,
    pub window: LagWindow,
}

/// Complex signal whose correlation defines the spectrum: α itself for
/// amplitudes, e^{−iφ} for phases.
fn signal(tr: &TrajectoryRecord, source: PhaseSource) -> Result<Vec<C64>, ClassicalError> {
    match (&tr.values, source) {
        (TrajectoryValues::Amplitude(a), PhaseSource::Amplitude) => Ok(a.clone()),
        (TrajectoryValues::AmplitudePair(p), PhaseSource::A) => Ok(p.iter().map(|x| x[0]).collect()),
        (TrajectoryValues::AmplitudePair(p), PhaseSource::B) => Ok(p.iter().map(|x| x[1]).collect()),
        (TrajectoryValues::PhasePair(_), PhaseSource::A | PhaseSource::B) => Ok(tr
            .phase_series(source)?
            .into_iter()
            .map(|phi| C64::from_polar(1.0, -phi))
            .collect()),
        _ => Err(ClassicalError::KindMismatch("spectra need a single oscillator source")),
    }
}

/// g(τ_k) = E[z*(t+τ_k) z(t)], τ_k = k·sample_dt, averaged over time
/// origins t ≥ t_min and over trajectories.
pub fn classical_correlation(
    trajs: &[TrajectoryRecord],
    source: PhaseSource,
    t_min: f64,
    max_lag_steps: usize,
) -> Result<Vec<C64>, ClassicalError> {
    if trajs.is_empty() {
        return Err(ClassicalError::NoTrajectories);
    }
    let signals = trajs
        .iter()
        .map(|tr| {
            let z = signal(tr, source)?;
            let start = tr.first_index_at(t_min).ok_or(ClassicalError::EmptySampleSet { t_min })?;
            let seg = z[start..].to_vec();
            if seg.len() <= max_lag_steps {
                return Err(ClassicalError::SegmentTooShort {
                    available: seg.len(),
                    required: max_lag_steps + 1,
                });
            }
            Ok(seg)
        })
        .collect::<Result<Vec<_>, ClassicalError>>()?;
    let n = signals.len() as f64;
    let sums = signals
        .par_iter()
        .map_init(FftPlanner::<f64>::new, |planner, seg| {
            let m = seg.len();
            lag_sums(seg, max_lag_steps, planner)
                .into_iter()
                .enumerate()
                .map(|(tau, r)| r / (m - tau) as f64)
                .collect::<Vec<C64>>()
        })
        .reduce(
            || vec![C64::new(0.0, 0.0); max_lag_steps + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Spectrum S(ω) = ∫dτ e^{−iωτ} g(τ) per oscillator: one series for a
/// single amplitude, two (A, B) for oscillator pairs.
pub fn classical_spectrum(
    trajs: &[TrajectoryRecord],
    t_min: f64,
    omegas: &[f64],
    options: &ClassicalSpectrumOptions,
) -> Result<Vec<SpectrumSeries>, ClassicalError> {
    let first = trajs.first().ok_or(ClassicalError::NoTrajectories)?;
    let sources: &[PhaseSource] = match first.values {
        TrajectoryValues::Amplitude(_) => &[PhaseSource::Amplitude],
        _ => &[PhaseSource::A, PhaseSource::B],
    };
    let h = first.sample_dt;
    let max_lag_steps = (options.max_lag / h).round() as usize;
    sources
        .iter()
        .map(|&src| {
            let g = classical_correlation(trajs, src, t_min, max_lag_steps)?;
            let decay = options.window.resolve(&g, h);
            let window = decay.map(|c| move |tau: f64| (-c * tau).exp());
            let s = spectrum_from_correlation(
                &g,
                h,
                omegas,
                window.as_ref().map(|w| w as &dyn Fn(f64) -> f64),
                SpectrumMethod::FftOfCorrelation,
            )?;
            Ok(s)
        })
        .collect()
}

/// Ensemble mean of (φ_AB(T) − φ_AB(t_min)) / (T − t_min) from unwrapped
/// phase pairs.
pub fn observed_frequency_difference(trajs: &[TrajectoryRecord], t_min: f64) -> Result<f64, ClassicalError> {
    if trajs.is_empty() {
        return Err(ClassicalError::NoTrajectories);
    }
    let mut acc = 0.0;
    for tr in trajs {
        let TrajectoryValues::PhasePair(p) = &tr.values else {
            return Err(ClassicalError::KindMismatch("observed frequency needs unwrapped phase pairs"));
        };
        let i = tr.first_index_at(t_min).ok_or(ClassicalError::EmptySampleSet { t_min })?;
        let j = p.len() - 1;
        if j <= i {
            return Err(ClassicalError::EmptySampleSet { t_min });
        }
        let d0 = p[i][0] - p[i][1];
        let d1 = p[j][0] - p[j][1];
        acc += (d1 - d0) / (tr.times[j] - tr.times[i]);
    }
    Ok(acc / trajs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{simulate_coupled_phases, simulate_vdp, CoupledPhaseParams, InitialPhases, IntegrationSpec, VdpParams};
    use crate::spectral::uniform_grid;

    #[test]
    fn noiseless_oscillator_has_single_bin_peak() {
        let p = VdpParams { kappa1: 1.0, kappa2: 1.0, omega: 3.0, sigma2: 0.0 };
        let spec = IntegrationSpec::new(1e-3, 60.0, 1, 0).with_sample_every(10);
        let tr = simulate_vdp(&p, C64::new(p.r0(), 0.0), &spec, InitialPhases::Fixed).unwrap();
        let omegas = uniform_grid(0.0, 6.0, 121);
        let opts = ClassicalSpectrumOptions { max_lag: 40.0, window: LagWindow::None };
        let s = &classical_spectrum(&tr, 5.0, &omegas, &opts).unwrap()[0];
        let k = s.peak_index();
        assert!((s.omegas[k] - p.omega).abs() < 0.5 * s.spacing() + 1e-3);
        // neighbouring bins fall far below the peak
        assert!(s.values[k + 2] < 0.25 * s.values[k]);
    }

    #[test]
    fn zero_lag_is_mean_square_amplitude() {
        let p = VdpParams { kappa1: 1.0, kappa2: 1.0, omega: 3.0, sigma2: 0.0 };
        let spec = IntegrationSpec::new(1e-3, 5.0, 2, 0).with_sample_every(10);
        let tr = simulate_vdp(&p, C64::new(p.r0(), 0.0), &spec, InitialPhases::Fixed).unwrap();
        let g = classical_correlation(&tr, PhaseSource::Amplitude, 0.0, 10).unwrap();
        assert!((g[0].re - 0.5).abs() < 1e-3 && g[0].im.abs() < 1e-12);
    }

    #[test]
    fn decoupled_phase_spectra_peak_at_half_detuning() {
        let p = CoupledPhaseParams { delta: 2.0, v: 0.0, sigma2: 0.4 };
        let spec = IntegrationSpec::new(1e-2, 60.0, 40, 3).with_sample_every(5);
        let tr = simulate_coupled_phases(&p, [0.0, 0.0], &spec, InitialPhases::Uniform).unwrap();
        let omegas = uniform_grid(-3.0, 3.0, 121);
        let opts = ClassicalSpectrumOptions { max_lag: 30.0, window: LagWindow::Auto };
        let s = classical_spectrum(&tr, 0.0, &omegas, &opts).unwrap();
        let h = s[0].spacing();
        assert!((s[0].peak_frequency() - 1.0).abs() <= h + 1e-9);
        assert!((s[1].peak_frequency() + 1.0).abs() <= h + 1e-9);
    }

    #[test]
    fn short_segment_rejected() {
        let p = VdpParams { kappa1: 1.0, kappa2: 1.0, omega: 3.0, sigma2: 0.0 };
        let spec = IntegrationSpec::new(1e-2, 1.0, 1, 0);
        let tr = simulate_vdp(&p, C64::new(1.0, 0.0), &spec, InitialPhases::Fixed).unwrap();
        assert!(matches!(
            classical_correlation(&tr, PhaseSource::Amplitude, 0.0, 500),
            Err(ClassicalError::SegmentTooShort { .. })
        ));
    }

    #[test]
    fn noiseless_detuned_beat_and_locking() {
        let spec = IntegrationSpec::new(1e-2, 40.0, 1, 0);
        let p = CoupledPhaseParams { delta: 1.0, v: 0.0, sigma2: 0.0 };
        let tr = simulate_coupled_phases(&p, [0.0, 0.0], &spec, InitialPhases::Fixed).unwrap();
        assert!((observed_frequency_difference(&tr, 10.0).unwrap() - 1.0).abs() < 1e-12);
        let p = CoupledPhaseParams { delta: 0.5, v: 1.0, sigma2: 0.0 };
        let tr = simulate_coupled_phases(&p, [0.0, 0.0], &spec, InitialPhases::Fixed).unwrap();
        assert!(observed_frequency_difference(&tr, 30.0).unwrap().abs() < 1e-6);
    }
}
