//! Intensity estimators: the standard count estimator, the jittered
//! median-based estimator over a cell grid, its data-driven aggregation over
//! a ladder of grid sizes, the asymptotic-variance estimator and a
//! conservative confidence interval.
//!
//! The median-based estimator divides the window into `k_n` congruent cells
//! of volume `c_n`, jitters each cell count with an independent `U[0,1)`
//! draw (`Z_k = N_k + U_k`, which gives the count variable a density) and
//! returns `median(Z)/c_n`. The sample quantile is the left-continuous
//! generalised inverse of the empirical cdf: the smallest order statistic
//! `Y_(i)` with `i/n >= p`.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pattern::{PointPattern, Window};
use crate::special::normal_quantile;
use crate::{Error, Result};

/// Which estimator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// `N(X ∩ W)/|W|`.
    Std,
    /// Jittered median over a `k_n`-cell grid.
    Med,
    /// Median of the median-based estimators over the grid ladder.
    MedDd,
}

impl EstimatorKind {
    pub fn tag(&self, k_n: Option<u32>) -> String {
        match self {
            EstimatorKind::Std => "std".into(),
            EstimatorKind::Med => match k_n {
                Some(k) => format!("med{k}"),
                None => "med".into(),
            },
            EstimatorKind::MedDd => "med-dd".into(),
        }
    }
}

/// An intensity estimate with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityEstimate {
    pub value: f64,
    pub kind: EstimatorKind,
    pub k_n: Option<u32>,
}

/// A decomposition of a window into `k_n` congruent, non-overlapping cells
/// tiling it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    window: Window,
    cells_per_axis: Vec<u32>,
    k_n: u32,
    c_n: f64,
}

impl CellGrid {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn k_n(&self) -> u32 {
        self.k_n
    }

    /// Cell volume `c_n = |W| / k_n`.
    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn cells_per_axis(&self) -> &[u32] {
        &self.cells_per_axis
    }

    /// Count points per cell, row-major over the axis grid. Cells are
    /// half-open `[a, b)` per axis with the last cell closed, so boundary
    /// points are counted exactly once.
    pub fn cell_counts(&self, pattern: &PointPattern) -> Result<Vec<u32>> {
        if pattern.window != self.window {
            return Err(Error::GridMismatch);
        }
        let d = self.window.dimension();
        let mut counts = vec![0u32; self.k_n as usize];
        for p in &pattern.points {
            let mut idx = 0usize;
            for axis in 0..d {
                let cells = self.cells_per_axis[axis] as usize;
                let a = self.window.bounds[axis][0];
                let width = self.window.side(axis) / cells as f64;
                let j = (((p[axis] - a) / width).floor() as usize).min(cells - 1);
                idx = idx * cells + j;
            }
            counts[idx] += 1;
        }
        Ok(counts)
    }
}

/// Build the grid with `k_n` cells; `k_n` must be a perfect d-th power so
/// the cells can be congruent squares.
pub fn make_grid(window: &Window, k_n: u32) -> Result<CellGrid> {
    let d = window.dimension() as u32;
    if k_n == 0 {
        return Err(Error::BadCellCount { kn: k_n, d });
    }
    let per_axis = (f64::from(k_n).powf(1.0 / f64::from(d))).round() as u32;
    if per_axis == 0 || per_axis.pow(d) != k_n {
        return Err(Error::BadCellCount { kn: k_n, d });
    }
    Ok(CellGrid {
        window: window.clone(),
        cells_per_axis: vec![per_axis; d as usize],
        k_n,
        c_n: window.volume() / f64::from(k_n),
    })
}

/// Jittered cell counts `Z_k = N_k + U_k` with the uniforms retained.
#[derive(Debug, Clone)]
pub struct JitteredCounts {
    pub counts: Vec<u32>,
    pub uniforms: Vec<f64>,
    pub values: Vec<f64>,
    pub k_n: u32,
    pub c_n: f64,
}

/// Draw the jitter (one uniform per cell, row-major) and form `Z`.
pub fn jittered_counts(
    pattern: &PointPattern,
    grid: &CellGrid,
    rng: &mut ChaCha8Rng,
) -> Result<JitteredCounts> {
    let counts = grid.cell_counts(pattern)?;
    let uniforms: Vec<f64> = counts.iter().map(|_| rng.random::<f64>()).collect();
    let values = counts
        .iter()
        .zip(&uniforms)
        .map(|(&n, &u)| f64::from(n) + u)
        .collect();
    Ok(JitteredCounts {
        counts,
        uniforms,
        values,
        k_n: grid.k_n(),
        c_n: grid.c_n(),
    })
}

/// Left-continuous sample quantile: `inf { x : p <= F_hat(x) }`, i.e. the
/// smallest order statistic `Y_(i)` with `i/n >= p`.
pub fn sample_quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadQuantileOrder { p });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    for (i, y) in sorted.iter().enumerate() {
        if (i + 1) as f64 / n as f64 >= p {
            return Ok(*y);
        }
    }
    Ok(*sorted.last().unwrap())
}

/// Standard estimator `N(X ∩ W)/|W|`.
pub fn lambda_std(pattern: &PointPattern) -> Result<IntensityEstimate> {
    let volume = pattern.window.volume();
    if !(volume > 0.0) {
        return Err(Error::InvalidWindow("zero-volume window".into()));
    }
    Ok(IntensityEstimate {
        value: pattern.len() as f64 / volume,
        kind: EstimatorKind::Std,
        k_n: None,
    })
}

/// Jittered median-based estimator `median(Z)/c_n` on the given grid.
pub fn lambda_med(
    pattern: &PointPattern,
    grid: &CellGrid,
    rng: &mut ChaCha8Rng,
) -> Result<IntensityEstimate> {
    let jittered = jittered_counts(pattern, grid, rng)?;
    let med = sample_quantile(&jittered.values, 0.5)?;
    Ok(IntensityEstimate {
        value: med / grid.c_n(),
        kind: EstimatorKind::Med,
        k_n: Some(grid.k_n()),
    })
}

/// Median-based estimates along a ladder of grid sizes, drawing fresh jitter
/// per grid in ladder order.
pub fn ladder_estimates(
    pattern: &PointPattern,
    grid_sizes: &[u32],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<IntensityEstimate>> {
    grid_sizes
        .iter()
        .map(|&k| {
            let grid = make_grid(&pattern.window, k)?;
            lambda_med(pattern, &grid, rng)
        })
        .collect()
}

/// Data-driven estimator: the median of the median-based estimators over the
/// ladder of grid sizes.
pub fn lambda_med_dd(
    pattern: &PointPattern,
    grid_sizes: &[u32],
    rng: &mut ChaCha8Rng,
) -> Result<IntensityEstimate> {
    let ladder = ladder_estimates(pattern, grid_sizes, rng)?;
    let values: Vec<f64> = ladder.iter().map(|e| e.value).collect();
    Ok(IntensityEstimate {
        value: sample_quantile(&values, 0.5)?,
        kind: EstimatorKind::MedDd,
        k_n: None,
    })
}

/// The taper used inside the variance estimator. The triangular product form
/// `k(x) = prod_i max(0, 1 - |x_i|)` is symmetric, bounded, continuous and
/// has `k(0) = 1`, with a closed-form integral over boxes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum Taper {
    #[default]
    TriangularProduct,
}

impl Taper {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Taper::TriangularProduct => x.iter().map(|v| (1.0 - v.abs()).max(0.0)).product(),
        }
    }

    /// `∫_W k(x) dx` in closed form (per-axis integral of the triangle
    /// truncated to the interval), taken in window-centred coordinates so
    /// the variance estimator is translation invariant.
    pub fn window_integral(&self, window: &Window) -> f64 {
        match self {
            Taper::TriangularProduct => window
                .bounds
                .iter()
                .map(|b| {
                    let half = 0.5 * (b[1] - b[0]);
                    let lo = (-half).max(-1.0);
                    let hi = half.min(1.0);
                    if hi <= lo {
                        return 0.0;
                    }
                    // ∫ max(0, 1-|t|) dt = [t - t|t|/2] on each side of 0.
                    let antider = |t: f64| t - t * t.abs() / 2.0;
                    antider(hi) - antider(lo)
                })
                .product(),
        }
    }
}

/// Default bandwidth `b_n = c_b |W|^{-1/(2d)}`.
pub fn default_bandwidth(window: &Window, c_b: f64) -> f64 {
    c_b * window.volume().powf(-1.0 / (2.0 * window.dimension() as f64))
}

/// Asymptotic-variance estimator
/// `sigma2 = lambda_std + sum_{x != y} k((y-x)/(|W|^{1/d} b_n)) / |(W-x) ∩ (W-y)|
///           - |W| b_n^d lambda_std (lambda_std - |W|^{-1}) ∫_W k`.
pub fn sigma2_hat(pattern: &PointPattern, taper: &Taper, b_n: f64) -> Result<f64> {
    let window = &pattern.window;
    let d = window.dimension();
    let volume = window.volume();
    let lambda_hat = lambda_std(pattern)?.value;
    let scale = volume.powf(1.0 / d as f64) * b_n;

    let mut pair_sum = 0.0;
    let pts = &pattern.points;
    let mut diff = vec![0.0; d];
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            let mut overlap = 1.0;
            for axis in 0..d {
                let dx = pts[j][axis] - pts[i][axis];
                diff[axis] = dx / scale;
                overlap *= window.side(axis) - dx.abs();
            }
            if overlap <= 0.0 {
                return Err(Error::DegenerateOverlap);
            }
            let k = taper.value(&diff);
            if k > 0.0 {
                pair_sum += k / overlap;
            }
        }
    }

    let correction = volume
        * b_n.powi(d as i32)
        * lambda_hat
        * (lambda_hat - 1.0 / volume)
        * taper.window_integral(window);
    Ok(lambda_hat + pair_sum - correction)
}

/// Conservative confidence interval around a (median-based) estimate: the
/// asymptotic variance is bounded by the Poisson-case value `pi lambda / 2`,
/// so `estimate ± z sqrt(pi estimate / 2) / sqrt(|W|)`.
pub fn conservative_ci(
    estimate: &IntensityEstimate,
    window_volume: f64,
    level: f64,
) -> (f64, f64) {
    assert!(estimate.value >= 0.0);
    assert!(level > 0.0 && level < 1.0);
    let z = normal_quantile(0.5 * (1.0 + level));
    let half = z * (std::f64::consts::PI * estimate.value / 2.0).sqrt() / window_volume.sqrt();
    (estimate.value - half, estimate.value + half)
}

/// Half-width of the conservative interval at `z` standard deviations.
pub fn conservative_half_width(lambda_hat: f64, window_volume: f64, z: f64) -> f64 {
    z * (std::f64::consts::PI * lambda_hat / 2.0).sqrt() / window_volume.sqrt()
}
