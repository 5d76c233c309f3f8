//! Stationary determinantal point processes (DPPs) with compactly supported
//! kernels: simulation, count-distribution analytics and robust intensity
//! estimation.
//!
//! The crate is organised around a single kernel family, the planar
//! Bessel-type kernel `C_R = u_R * u_R` (a self-convolution, so its Fourier
//! transform is a square and existence is easy to check). On top of it sit:
//!
//! - [`kernel`] — the kernel family, its Fourier transform, existence checks
//!   and derived constants (`M`, `κ`, `Č₀`);
//! - [`sampler`] — spectral (Fourier-basis) simulation of the DPP on a
//!   rectangular window, plus a homogeneous Poisson baseline;
//! - [`countdist`] — exact Poisson and Poisson-Binomial count distributions,
//!   the Poisson-approximation bounds and the jittered-median diagnostics;
//! - [`estimators`] — the standard estimator `N/|W|`, the jittered
//!   median-based estimator, its data-driven aggregation, an asymptotic
//!   variance estimator and a conservative confidence interval;
//! - [`contamination`] — outlier injection (extra points in sub-squares,
//!   deleted sub-squares, uniform addition/deletion);
//! - [`harness`] — a reproducible Monte Carlo experiment runner that
//!   aggregates bias, standard deviation, MSE and relative efficiency.
//!
//! All randomness flows through per-replication [`rand_chacha::ChaCha8Rng`]
//! streams derived from a master seed, so experiments reproduce bit-for-bit
//! regardless of thread count.

#![forbid(unsafe_code)]

pub mod contamination;
pub mod countdist;
pub mod estimators;
pub mod harness;
pub mod kernel;
pub mod pattern;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod special;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Bessel order nu = {nu}")]
    UnsupportedBesselOrder { nu: f64 },

    #[error("unsupported dimension d = {d} for the Bessel-type kernel family")]
    UnsupportedDimension { d: u32 },

    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("quadrature did not converge: achieved tolerance {achieved:e} > requested {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("kernel range R = {range} must be smaller than the shortest window side {min_side} (periodisation would alias the kernel support)")]
    RangeExceedsWindow { range: f64, min_side: f64 },

    #[error("rejection sampling exceeded {cap} proposals at point {point_index} of {total_points} (basis size {basis_size}); the projection is numerically degenerate")]
    RejectionCapExceeded {
        cap: u64,
        point_index: usize,
        total_points: usize,
        basis_size: usize,
    },

    #[error("k_n = {kn} cells cannot be arranged as an integer grid in dimension {d}")]
    BadCellCount { kn: u32, d: u32 },

    #[error("grid does not tile the pattern's window")]
    GridMismatch,

    #[error("empty sample")]
    EmptySample,

    #[error("quantile order p = {p} must lie in (0, 1)")]
    BadQuantileOrder { p: f64 },

    #[error("C-check = {c_check} must lie strictly between 0 and lambda = {lambda}")]
    CCheckOutOfRange { c_check: f64, lambda: f64 },

    #[error("translation overlap volume vanished for a point pair; pattern is inconsistent with its window")]
    DegenerateOverlap,

    #[error("sub-square of side {side} does not fit inside the window")]
    SubSquareTooLarge { side: f64 },

    #[error("failed to place {squares} disjoint sub-squares after {attempts} attempts")]
    PlacementFailed { squares: u32, attempts: u64 },

    #[error("invalid contamination specification: {0}")]
    InvalidContamination(String),

    #[error("MSE of the reference estimator is zero; gain is undefined")]
    ZeroReferenceMse,

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("replication {replication} (seed {seed}) failed: {source}")]
    ReplicationFailed {
        replication: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed pattern file at line {line}: {reason}")]
    MalformedPattern { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use contamination::ContaminationSpec;
pub use estimators::{CellGrid, EstimatorKind, IntensityEstimate, JitteredCounts};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use kernel::{KernelConfig, KernelSpec, RadialFunction};
pub use pattern::{PointPattern, Window};
pub use sampler::SpectralModel;
