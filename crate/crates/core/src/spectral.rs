//! Spectral estimation shared by the classical, regression-theorem and
//! detector-current paths.
//!
//! Sign convention everywhere: S(ω) = ∫ dτ e^{−iωτ} g(τ) with
//! g(τ) = E[z*(t+τ) z(t)]. A signal z ∝ e^{−iΩt} therefore peaks at ω = +Ω.

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("frequency grid must be uniform with at least two points")]
    NonUniformGrid,
    #[error("grid and values differ in length ({grid} vs {values})")]
    LengthMismatch { grid: usize, values: usize },
    #[error("segment of {available} samples is shorter than the {required} required")]
    SegmentTooShort { available: usize, required: usize },
    #[error("Lorentzian fit failed: {0}")]
    FitFailed(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// Fourier transform of an estimated two-time correlation.
    FftOfCorrelation,
    /// Quantum regression theorem applied to the steady state.
    RegressionTheorem,
    /// Averaged periodogram of detector currents.
    CurrentPeriodogram,
}

impl SpectrumMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SpectrumMethod::FftOfCorrelation => "fft-of-correlation",
            SpectrumMethod::RegressionTheorem => "regression-theorem",
            SpectrumMethod::CurrentPeriodogram => "current-periodogram",
        }
    }
}

/// Real spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub method: SpectrumMethod,
    /// max |Im S| / max |Re S| before the imaginary part was dropped.
    pub imag_residue: f64,
}

impl SpectrumSeries {
    pub fn new(
        omegas: Vec<f64>,
        values: Vec<f64>,
        method: SpectrumMethod,
    ) -> Result<Self, SpectralError> {
        if omegas.len() != values.len() {
            return Err(SpectralError::LengthMismatch {
                grid: omegas.len(),
                values: values.len(),
            });
        }
        check_uniform(&omegas)?;
        Ok(Self {
            omegas,
            values,
            method,
            imag_residue: 0.0,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.omegas[1] - self.omegas[0]
    }

    pub fn peak_index(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn peak_frequency(&self) -> f64 {
        self.omegas[self.peak_index()]
    }

    pub fn peak_value(&self) -> f64 {
        self.values[self.peak_index()]
    }

    /// Trapezoid estimate of (1/2π) ∫ S dω over the grid.
    pub fn total_power(&self) -> f64 {
        let h = self.spacing();
        let n = self.values.len();
        let inner: f64 = self.values.iter().sum();
        (inner - 0.5 * (self.values[0] + self.values[n - 1])) * h / (2.0 * std::f64::consts::PI)
    }

    /// Averages the spectrum over windows of width `width` centred on each
    /// of `centers`; every native bin inside [c − w/2, c + w/2) contributes.
    pub fn window_average(&self, centers: &[f64], width: f64) -> Result<SpectrumSeries, SpectralError> {
        let values = centers
            .iter()
            .map(|&c| {
                let (mut acc, mut count) = (0.0, 0usize);
                for (w, v) in self.omegas.iter().zip(&self.values) {
                    if *w >= c - 0.5 * width && *w < c + 0.5 * width {
                        acc += v;
                        count += 1;
                    }
                }
                if count == 0 {
                    f64::NAN
                } else {
                    acc / count as f64
                }
            })
            .collect();
        let mut out = SpectrumSeries::new(centers.to_vec(), values, self.method)?;
        out.imag_residue = self.imag_residue;
        Ok(out)
    }

    /// Linear interpolation onto `omega`; NaN outside the grid.
    pub fn interpolate(&self, omega: f64) -> f64 {
        let h = self.spacing();
        let x = (omega - self.omegas[0]) / h;
        if x < 0.0 || x > (self.omegas.len() - 1) as f64 {
            return f64::NAN;
        }
        let i = (x.floor() as usize).min(self.omegas.len() - 2);
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn normalized_to_max(&self) -> SpectrumSeries {
        let m = self.peak_value();
        let mut out = self.clone();
        if m > 0.0 {
            out.values.iter_mut().for_each(|v| *v /= m);
        }
        out
    }
}

fn check_uniform(grid: &[f64]) -> Result<(), SpectralError> {
    if grid.len() < 2 {
        return Err(SpectralError::NonUniformGrid);
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) {
        return Err(SpectralError::NonUniformGrid);
    }
    let tol = 1e-9 * h.abs().max(grid.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > tol.max(1e-12) {
            return Err(SpectralError::NonUniformGrid);
        }
    }
    Ok(())
}

/// Relative tail |g(τ_max)|/|g(0)| above which a correlation is flagged as
/// truncated.
pub const TAIL_THRESHOLD: f64 = 0.05;

/// Lag window applied to a correlation before the Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LagWindow {
    #[default]
    None,
    /// Multiply by e^{−decay·τ}.
    Exponential { decay: f64 },
    /// Exponential window only when the tail is flagged, chosen so the
    /// windowed tail drops to 1% of its value.
    Auto,
}

/// Relative tail |g_N|/|g_0|.
pub fn tail_ratio(g: &[C64]) -> f64 {
    match (g.first(), g.last()) {
        (Some(g0), Some(gn)) if g0.norm() > 0.0 => gn.norm() / g0.norm(),
        _ => 0.0,
    }
}

impl LagWindow {
    /// Decay rate actually applied to `g` sampled at spacing `dtau`.
    pub fn resolve(&self, g: &[C64], dtau: f64) -> Option<f64> {
        match *self {
            LagWindow::None => None,
            LagWindow::Exponential { decay } => Some(decay),
            LagWindow::Auto => {
                let tau_max = (g.len().saturating_sub(1)) as f64 * dtau;
                (tail_ratio(g) > TAIL_THRESHOLD && tau_max > 0.0).then(|| 100f64.ln() / tau_max)
            }
        }
    }
}

/// n points from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let h = (stop - start) / (n - 1) as f64;
    (0..n).map(|k| start + h * k as f64).collect()
}

/// Fourier transform of a correlation g(τ_k), τ_k = k·dtau, k = 0..N,
/// extended to negative lags by g(−τ) = g(τ)*. Trapezoid weights, optional
/// lag window.
pub fn spectrum_from_correlation(
    g: &[C64],
    dtau: f64,
    omegas: &[f64],
    window: Option<&dyn Fn(f64) -> f64>,
    method: SpectrumMethod,
) -> Result<SpectrumSeries, SpectralError> {
    check_uniform(omegas)?;
    let n = g.len();
    if n < 2 {
        return Err(SpectralError::SegmentTooShort {
            available: n,
            required: 2,
        });
    }
    let weighted: Vec<C64> = g
        .iter()
        .enumerate()
        .map(|(k, gk)| {
            let mut w = if k == n - 1 { 0.5 } else { 1.0 };
            if let Some(f) = window {
                w *= f(k as f64 * dtau);
            }
            gk * w
        })
        .collect();
    let mut max_re = 0.0_f64;
    let mut max_im = 0.0_f64;
    let values: Vec<f64> = omegas
        .iter()
        .map(|&omega| {
            // k = 0 counted once; ±k pairs with conjugate symmetry
            let mut acc = weighted[0];
            for (k, gk) in weighted.iter().enumerate().skip(1) {
                let phase = C64::from_polar(1.0, -omega * k as f64 * dtau);
                acc += gk * phase + (gk * phase).conj();
            }
            let s = acc * dtau;
            max_re = max_re.max(s.re.abs());
            max_im = max_im.max(s.im.abs());
            s.re
        })
        .collect();
    let mut series = SpectrumSeries::new(omegas.to_vec(), values, method)?;
    series.imag_residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    Ok(series)
}

/// Unnormalized lag sums r(τ) = Σ_t z*(t+τ) z(t) for τ = 0..=max_lag,
/// computed with a zero-padded FFT.
pub fn lag_sums(z: &[C64], max_lag: usize, planner: &mut FftPlanner<f64>) -> Vec<C64> {
    let m = z.len();
    let len = (2 * m).next_power_of_two();
    let mut buf: Vec<C64> = Vec::with_capacity(len);
    buf.extend_from_slice(z);
    buf.resize(len, C64::new(0.0, 0.0));
    planner.plan_fft_forward(len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = C64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    // ifft(|Z|²)[τ]/len = Σ_t z(t+τ) z*(t); conjugate for z*(t+τ) z(t)
    (0..=max_lag.min(m.saturating_sub(1)))
        .map(|tau| buf[tau].conj() * scale)
        .collect()
}

/// Periodogram (Δ/N)|Σ_n x_n e^{+iω_k nΔ}|² on the native FFT grid
/// ω_k = 2πk/(NΔ), returned in ascending frequency order.
pub fn periodogram(x: &[C64], sample_dt: f64, planner: &mut FftPlanner<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut buf = x.to_vec();
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = sample_dt / n as f64;
    let base = 2.0 * std::f64::consts::PI / (n as f64 * sample_dt);
    let half = n / 2;
    let mut omegas = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    // negative frequencies first: k = half+1 .. n-1 map to k - n
    for k in (half + 1)..n {
        omegas.push((k as f64 - n as f64) * base);
        values.push(buf[k].norm_sqr() * scale);
    }
    for (k, v) in buf.iter().enumerate().take(half + 1) {
        omegas.push(k as f64 * base);
        values.push(v.norm_sqr() * scale);
    }
    (omegas, values)
}

/// Parameters of A / (1 + ((ω − ω₀)/(Γ/2))²) + c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub amplitude: f64,
    pub center: f64,
    /// Full width at half maximum.
    pub fwhm: f64,
    pub offset: f64,
    pub rms_residual: f64,
}

impl LorentzianFit {
    pub fn eval(&self, omega: f64) -> f64 {
        let x = (omega - self.center) / (0.5 * self.fwhm);
        self.amplitude / (1.0 + x * x) + self.offset
    }
}

/// Levenberg–Marquardt least-squares Lorentzian fit over the points with
/// |ω − ω_peak| ≤ half_window. The offset is fitted only if `fit_offset`.
pub fn fit_lorentzian(
    spectrum: &SpectrumSeries,
    half_window: f64,
    fit_offset: bool,
) -> Result<LorentzianFit, SpectralError> {
    let peak = spectrum.peak_index();
    let center0 = spectrum.omegas[peak];
    let pts: Vec<(f64, f64)> = spectrum
        .omegas
        .iter()
        .zip(&spectrum.values)
        .filter(|(w, v)| (**w - center0).abs() <= half_window && v.is_finite())
        .map(|(w, v)| (*w, *v))
        .collect();
    let n_par = if fit_offset { 4 } else { 3 };
    if pts.len() < n_par + 1 {
        return Err(SpectralError::FitFailed("too few points in fit window"));
    }
    let amp0 = spectrum.values[peak];
    // half-maximum crossing for the initial width
    let half = 0.5 * amp0;
    let mut hw0 = spectrum.spacing();
    for (w, v) in &pts {
        if *v >= half {
            hw0 = hw0.max((w - center0).abs());
        }
    }
    let mut p = [amp0, center0, hw0.max(spectrum.spacing()), 0.0];

    let residuals = |p: &[f64; 4]| -> f64 {
        pts.iter()
            .map(|(w, v)| {
                let x = (w - p[1]) / p[2];
                let m = p[0] / (1.0 + x * x) + p[3];
                (m - v).powi(2)
            })
            .sum()
    };
    let mut cost = residuals(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = DMatrix::<f64>::zeros(n_par, n_par);
        let mut jtr = DVector::<f64>::zeros(n_par);
        for (w, v) in &pts {
            let x = (w - p[1]) / p[2];
            let den = 1.0 + x * x;
            let model = p[0] / den + p[3];
            let r = model - v;
            let mut grad = [
                1.0 / den,
                p[0] * 2.0 * x / (p[2] * den * den),
                p[0] * 2.0 * x * x / (p[2] * den * den),
                1.0,
            ];
            if !fit_offset {
                grad[3] = 0.0;
            }
            for a in 0..n_par {
                jtr[a] += grad[a] * r;
                for b in 0..n_par {
                    jtj[(a, b)] += grad[a] * grad[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for a in 0..n_par {
                damped[(a, a)] *= 1.0 + lambda;
            }
            let Some(step) = damped.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p;
            for a in 0..n_par {
                trial[a] += step[a];
            }
            trial[2] = trial[2].abs().max(1e-12);
            let c = residuals(&trial);
            if c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-12;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !p.iter().all(|x| x.is_finite()) {
        return Err(SpectralError::FitFailed("non-finite parameters"));
    }
    Ok(LorentzianFit {
        amplitude: p[0],
        center: p[1],
        fwhm: 2.0 * p[2],
        offset: p[3],
        rms_residual: (cost / pts.len() as f64).sqrt(),
    })
}
