use serde::{Deserialize, Serialize};

use super::{wrap_phase, ClassicalError, TrajectoryRecord, TrajectoryValues};
use crate::linalg::C64;

/// Minimum bin count for phase histograms.
pub const MIN_PHASE_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramDomain {
    Phase,
    PhaseDifference,
    XyPlane,
    Radius,
}

impl HistogramDomain {
    pub fn tag(&self) -> &'static str {
        match self {
            HistogramDomain::Phase => "phase",
            HistogramDomain::PhaseDifference => "phase-difference",
            HistogramDomain::XyPlane => "xy-plane",
            HistogramDomain::Radius => "radius",
        }
    }
}

/// Which phase a histogram or spectrum is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSource {
    /// φ = −arg α of a single amplitude.
    Amplitude,
    A,
    B,
    /// φ_AB = φ_A − φ_B.
    Difference,
}

/// Binned probability distribution. For two-dimensional domains `masses`
/// is row-major over (x index, p index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDist {
    pub domain: HistogramDomain,
    /// Bin edges per axis.
    pub edges: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    /// Standard error of each mass from the spread across independent
    /// batches (trajectories), when at least two batches contributed.
    pub std_errors: Option<Vec<f64>>,
    pub n_samples: usize,
    /// Samples that fell outside the grid or were rejected.
    pub skipped: usize,
}

fn uniform_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..=n).map(|k| lo + h * k as f64).collect()
}

fn bin_of(x: f64, lo: f64, hi: f64, n: usize) -> Option<usize> {
    if !(x >= lo && x < hi) {
        return None;
    }
    Some((((x - lo) / (hi - lo) * n as f64) as usize).min(n - 1))
}

impl HistogramDist {
    /// Phase histogram on [0, 2π) from independent batches of angles
    /// (wrapped here). Non-finite angles are skipped.
    pub fn from_phase_batches(
        batches: &[Vec<f64>],
        n_bins: usize,
        domain: HistogramDomain,
    ) -> Result<Self, ClassicalError> {
        if n_bins < MIN_PHASE_BINS {
            return Err(ClassicalError::TooFewBins { min: MIN_PHASE_BINS, got: n_bins });
        }
        let tau = std::f64::consts::TAU;
        let counts: Vec<Vec<usize>> = batches
            .iter()
            .map(|b| {
                let mut c = vec![0usize; n_bins];
                for &phi in b {
                    if let Some(k) = bin_of(wrap_phase(phi), 0.0, tau, n_bins) {
                        c[k] += 1;
                    }
                }
                c
            })
            .collect();
        let skipped = batches
            .iter()
            .zip(&counts)
            .map(|(b, c)| b.len() - c.iter().sum::<usize>())
            .sum();
        Self::from_batch_counts(domain, vec![uniform_edges(0.0, tau, n_bins)], &counts, skipped)
    }

    fn from_batch_counts(
        domain: HistogramDomain,
        edges: Vec<Vec<f64>>,
        counts: &[Vec<usize>],
        skipped: usize,
    ) -> Result<Self, ClassicalError> {
        let n_cells = counts.first().map(|c| c.len()).unwrap_or(0);
        let mut total = vec![0usize; n_cells];
        for c in counts {
            for (t, x) in total.iter_mut().zip(c) {
                *t += x;
            }
        }
        let n_samples: usize = total.iter().sum();
        if n_samples == 0 {
            return Err(ClassicalError::EmptySampleSet { t_min: f64::NAN });
        }
        let masses: Vec<f64> = total.iter().map(|&c| c as f64 / n_samples as f64).collect();
        let std_errors = if counts.len() >= 2 {
            let fractions: Vec<Vec<f64>> = counts
                .iter()
                .filter_map(|c| {
                    let n: usize = c.iter().sum();
                    (n > 0).then(|| c.iter().map(|&x| x as f64 / n as f64).collect())
                })
                .collect();
            let m = fractions.len() as f64;
            (m >= 2.0).then(|| {
                (0..n_cells)
                    .map(|k| {
                        let mean = fractions.iter().map(|f| f[k]).sum::<f64>() / m;
                        let var = fractions.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / (m - 1.0);
                        (var / m).sqrt()
                    })
                    .collect()
            })
        } else {
            None
        };
        Ok(Self {
            domain,
            edges,
            masses,
            std_errors,
            n_samples,
            skipped,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    pub fn bin_centers(&self, axis: usize) -> Vec<f64> {
        self.edges[axis].windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    fn cell_measure(&self, cell: usize) -> f64 {
        match self.edges.len() {
            1 => self.edges[0][cell + 1] - self.edges[0][cell],
            _ => {
                let n_p = self.edges[1].len() - 1;
                let (i, j) = (cell / n_p, cell % n_p);
                (self.edges[0][i + 1] - self.edges[0][i]) * (self.edges[1][j + 1] - self.edges[1][j])
            }
        }
    }

    /// Mass divided by bin measure.
    pub fn density(&self) -> Vec<f64> {
        self.masses
            .iter()
            .enumerate()
            .map(|(k, m)| m / self.cell_measure(k))
            .collect()
    }

    pub fn max_density(&self) -> f64 {
        self.density().into_iter().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        self.masses
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }

    /// Centre of the most populated bin (one-dimensional domains).
    pub fn argmax_center(&self) -> f64 {
        self.bin_centers(0)[self.argmax()]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Whether `x` lies in the bin `k` (one-dimensional domains).
    pub fn bin_contains(&self, k: usize, x: f64) -> bool {
        x >= self.edges[0][k] && x < self.edges[0][k + 1]
    }
}

fn stationary_slice<'a, T>(tr: &TrajectoryRecord, v: &'a [T], t_min: f64) -> &'a [T] {
    match tr.first_index_at(t_min) {
        Some(i) => &v[i..],
        None => &v[v.len()..],
    }
}

/// Histogram of a phase (mod 2π) over all samples with t ≥ t_min. Each
/// trajectory is one batch for the standard errors.
pub fn histogram_phase(
    trajs: &[TrajectoryRecord],
    source: PhaseSource,
    t_min: f64,
    n_bins: usize,
) -> Result<HistogramDist, ClassicalError> {
    if trajs.is_empty() {
        return Err(ClassicalError::NoTrajectories);
    }
    let batches = trajs
        .iter()
        .map(|tr| {
            let phases = tr.phase_series(source)?;
            Ok(stationary_slice(tr, &phases, t_min).to_vec())
        })
        .collect::<Result<Vec<_>, ClassicalError>>()?;
    if batches.iter().all(|b| b.is_empty()) {
        return Err(ClassicalError::EmptySampleSet { t_min });
    }
    let domain = match source {
        PhaseSource::Difference => HistogramDomain::PhaseDifference,
        _ => HistogramDomain::Phase,
    };
    HistogramDist::from_phase_batches(&batches, n_bins, domain)
}

/// Uniform rectangular grid in the (x, p) = (Re α, Im α) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl XyGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            n_x: n,
            p_min: -half_width,
            p_max: half_width,
            n_p: n,
        }
    }
}

fn snapshot_amplitudes(trajs: &[TrajectoryRecord], t: f64) -> Result<Vec<C64>, ClassicalError> {
    if trajs.is_empty() {
        return Err(ClassicalError::NoTrajectories);
    }
    trajs
        .iter()
        .map(|tr| {
            let t_end = *tr.times.last().unwrap_or(&0.0);
            if !(t >= -1e-12 && t <= t_end + 1e-9 * tr.sample_dt.max(1.0)) {
                return Err(ClassicalError::SnapshotOutOfRange { t, t_end });
            }
            let k = ((t / tr.sample_dt).round() as usize).min(tr.times.len() - 1);
            match &tr.values {
                TrajectoryValues::Amplitude(a) => Ok(a[k]),
                _ => Err(ClassicalError::KindMismatch("xy histograms need single amplitudes")),
            }
        })
        .collect()
}

/// Two-dimensional histogram of (Re α, Im α) across trajectories at the
/// sample closest to `t_snapshot`.
pub fn histogram_xy(trajs: &[TrajectoryRecord], t_snapshot: f64, grid: &XyGrid) -> Result<HistogramDist, ClassicalError> {
    if grid.n_x == 0 || grid.n_p == 0 || !(grid.x_max > grid.x_min) || !(grid.p_max > grid.p_min) {
        return Err(ClassicalError::InvalidParams("empty xy grid".into()));
    }
    let samples = snapshot_amplitudes(trajs, t_snapshot)?;
    let mut counts = vec![0usize; grid.n_x * grid.n_p];
    let mut skipped = 0;
    for z in &samples {
        match (
            bin_of(z.re, grid.x_min, grid.x_max, grid.n_x),
            bin_of(z.im, grid.p_min, grid.p_max, grid.n_p),
        ) {
            (Some(i), Some(j)) => counts[i * grid.n_p + j] += 1,
            _ => skipped += 1,
        }
    }
    let edges = vec![
        uniform_edges(grid.x_min, grid.x_max, grid.n_x),
        uniform_edges(grid.p_min, grid.p_max, grid.n_p),
    ];
    HistogramDist::from_batch_counts(HistogramDomain::XyPlane, edges, &[counts], skipped)
}

/// Histogram of |α| on [0, r_max) at the sample closest to `t_snapshot`.
pub fn histogram_radius(
    trajs: &[TrajectoryRecord],
    t_snapshot: f64,
    n_bins: usize,
    r_max: f64,
) -> Result<HistogramDist, ClassicalError> {
    if n_bins == 0 || !(r_max > 0.0) {
        return Err(ClassicalError::InvalidParams("empty radial grid".into()));
    }
    let samples = snapshot_amplitudes(trajs, t_snapshot)?;
    let mut counts = vec![0usize; n_bins];
    let mut skipped = 0;
    for z in &samples {
        match bin_of(z.norm(), 0.0, r_max, n_bins) {
            Some(k) => counts[k] += 1,
            None => skipped += 1,
        }
    }
    HistogramDist::from_batch_counts(HistogramDomain::Radius, vec![uniform_edges(0.0, r_max, n_bins)], &[counts], skipped)
}
