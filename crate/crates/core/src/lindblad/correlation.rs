use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Liouvillian, LindbladError, Rk4};
use crate::linalg::{trace_of_product, DensityOperator, Operator, C64};
use crate::spectral::{spectrum_from_correlation, tail_ratio, LagWindow, SpectrumMethod, SpectrumSeries, TAIL_THRESHOLD};

/// g(τ) = Tr[A e^{Lτ}(B ρ)] on τ_k = k·d_tau.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub taus: Vec<f64>,
    pub g: Vec<C64>,
    pub tail_ratio: f64,
    /// |g(τ_max)|/|g(0)| exceeded the tail threshold.
    pub tail_flagged: bool,
    /// RK4 substeps per d_tau.
    pub substeps: usize,
    /// Exponential window decay applied before the transform, if any.
    pub window_decay: Option<f64>,
}

/// Regression-theorem correlation ⟨A(τ) B(0)⟩ in the state `rho`.
pub fn correlation_function(
    l: &Liouvillian,
    rho: &DensityOperator,
    a: &Operator,
    b: &Operator,
    tau_max: f64,
    d_tau: f64,
) -> Result<Correlation, LindbladError> {
    let n = l.dim();
    for dim in [rho.dim(), a.dim(), b.dim()] {
        if dim != n {
            return Err(LindbladError::DimensionMismatch { expected: n, found: dim });
        }
    }
    if !(d_tau > 0.0 && tau_max > d_tau) {
        return Err(LindbladError::InvalidArgument(format!("need 0 < d_tau < tau_max, got {d_tau}, {tau_max}")));
    }
    let n_lags = (tau_max / d_tau).round() as usize;
    let substeps = (d_tau / l.stable_step()).ceil().max(1.0) as usize;
    let h = d_tau / substeps as f64;
    let mut x: DMatrix<C64> = b.matrix() * rho.matrix();
    let mut rk = Rk4::new(n);
    let mut g = Vec::with_capacity(n_lags + 1);
    g.push(trace_of_product(a.matrix(), &x));
    for _ in 0..n_lags {
        for _ in 0..substeps {
            rk.step(l, &mut x, h);
        }
        g.push(trace_of_product(a.matrix(), &x));
    }
    if g.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LindbladError::StepSize {
            t: tau_max,
            dt: h,
            suggested_dt: 0.5 * h,
            cause: "non-finite correlation".into(),
        });
    }
    let ratio = tail_ratio(&g);
    Ok(Correlation {
        taus: (0..=n_lags).map(|k| k as f64 * d_tau).collect(),
        g,
        tail_ratio: ratio,
        tail_flagged: ratio > TAIL_THRESHOLD,
        substeps,
        window_decay: None,
    })
}

/// S(ω) = ∫dτ e^{−iωτ} ⟨A(τ)B(0)⟩ with g(−τ) = g(τ)*.
#[allow(clippy::too_many_arguments)]
pub fn correlation_spectrum(
    l: &Liouvillian,
    rho_ss: &DensityOperator,
    a: &Operator,
    b: &Operator,
    tau_max: f64,
    d_tau: f64,
    omegas: &[f64],
    window: LagWindow,
) -> Result<(SpectrumSeries, Correlation), LindbladError> {
    let mut corr = correlation_function(l, rho_ss, a, b, tau_max, d_tau)?;
    let decay = window.resolve(&corr.g, d_tau);
    corr.window_decay = decay;
    let w = decay.map(|c| move |tau: f64| (-c * tau).exp());
    let s = spectrum_from_correlation(
        &corr.g,
        d_tau,
        omegas,
        w.as_ref().map(|f| f as &dyn Fn(f64) -> f64),
        SpectrumMethod::RegressionTheorem,
    )?;
    Ok((s, corr))
}
