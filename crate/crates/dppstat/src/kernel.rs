//! The compactly supported Bessel-type DPP kernel family `C_R = u_R * u_R`.
//!
//! The generating profile is
//!
//! ```text
//! u_R(x) = kappa * J_{(d-2)/2}(2 j_{(d-2)/2} |x| / R) / |x|^{(d-2)/2},   |x| < R/2,
//! ```
//!
//! so the kernel `C_R` is supported on the Euclidean ball of radius `R` and
//! its Fourier transform `F(C_R) = F(u_R)^2` is nonnegative by construction.
//! `kappa` is normalised so that `C_R(0) = lambda` (the defining property of
//! an intensity-`lambda` kernel; note it forces `kappa^2` proportional to
//! `lambda`, not `1/lambda`).
//!
//! The admissible range is `0 < R <= M` where
//! `M lambda^{1/d} = (2^{d-2} j_{(d-2)/2}^2 Gamma(d/2))^{1/d} / pi^{1/2}`;
//! at `R = M` the Fourier sup reaches 1 and existence becomes non-strict.
//! Only the planar case `d = 2` is implemented for kernel evaluation
//! (`nu = 0`); `max_range` also covers `d = 1, 3, 4`.
//!
//! Numerics: `F(u_R)` is a 1-D radial (Hankel-type) quadrature of `u_R`
//! against `J_0`, cached on fixed Gauss–Legendre grids whose convergence is
//! verified at construction by node doubling. Direct-space values `C_R(r)`
//! are synthesised by the inverse Hankel transform of `F(C_R)`; a 2-D
//! convolution quadrature serves as the independent test oracle.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::quad::{integrate_adaptive, GaussLegendre};
use crate::special::{bessel_j0, bessel_j1, first_bessel_zero, gamma_half_integer};
use crate::{Error, Result};

/// Absolute tolerance for the radial transforms.
const TRANSFORM_TOL: f64 = 1e-8;

/// Dimensionless cutoff `R * rho_max` for the inverse Hankel synthesis; the
/// spectral tail beyond it carries `O(cutoff^-3)` of the mass.
const SYNTHESIS_CUTOFF: f64 = 180.0;

/// Maximum admissible range `M` for intensity `lambda` in dimension `d`,
/// from `M lambda^{1/d} = (2^{d-2} j_{(d-2)/2}^2 Gamma(d/2))^{1/d} / sqrt(pi)`.
pub fn max_range(lambda: f64, d: u32) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidKernel(format!(
            "intensity must be positive, got {lambda}"
        )));
    }
    if d == 0 || d > 4 {
        return Err(Error::UnsupportedDimension { d });
    }
    let nu = (f64::from(d) - 2.0) / 2.0;
    let j = first_bessel_zero(nu)?;
    let pow = 2f64.powi(d as i32 - 2) * j * j * gamma_half_integer(d);
    Ok(pow.powf(1.0 / f64::from(d)) / (std::f64::consts::PI.sqrt() * lambda.powf(1.0 / f64::from(d))))
}

/// A radial profile: an evaluation rule `r -> value` that vanishes beyond its
/// support radius.
pub struct RadialFunction {
    support: f64,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RadialFunction {
    pub fn new(support: f64, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RadialFunction {
            support,
            eval: Arc::new(eval),
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support
    }

    /// Value at radius `r`; exactly zero beyond the support radius.
    pub fn value(&self, r: f64) -> f64 {
        if r > self.support {
            0.0
        } else {
            (self.eval)(r)
        }
    }
}

impl Clone for RadialFunction {
    fn clone(&self) -> Self {
        RadialFunction {
            support: self.support,
            eval: Arc::clone(&self.eval),
        }
    }
}

impl std::fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialFunction")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

/// Flat serialisable form of a kernel specification, as it appears in
/// experiment configs: `{family = "bessel", d = 2, lambda = 50.0,
/// R_fraction = 0.25}` with `R = R_fraction * M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: String,
    pub d: u32,
    pub lambda: f64,
    #[serde(rename = "R_fraction")]
    pub r_fraction: f64,
}

impl KernelConfig {
    pub fn dpp1(lambda: f64) -> Self {
        KernelConfig {
            family: "bessel".into(),
            d: 2,
            lambda,
            r_fraction: 0.25,
        }
    }

    pub fn dpp2(lambda: f64) -> Self {
        KernelConfig {
            family: "bessel".into(),
            d: 2,
            lambda,
            r_fraction: 0.75,
        }
    }

    pub fn build(&self) -> Result<KernelSpec> {
        if self.family != "bessel" {
            return Err(Error::InvalidKernel(format!(
                "unknown kernel family {:?}",
                self.family
            )));
        }
        KernelSpec::from_fraction(self.d, self.lambda, self.r_fraction)
    }
}

/// Quadrature grid for the radial transform of `u_R`: `F(u_R)(rho) =
/// sum_i w_i J_0(2 pi r_i rho)` with `w_i` absorbing `2 pi r u_R(r)` and the
/// Gauss–Legendre weight.
#[derive(Debug, Clone)]
struct FourierProfile {
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl FourierProfile {
    fn build(order: usize, half_range: f64, u: impl Fn(f64) -> f64) -> Self {
        let gl = GaussLegendre::new(order);
        let half = 0.5 * half_range;
        let mut radii = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let r = half + half * x;
            radii.push(r);
            weights.push(2.0 * std::f64::consts::PI * w * half * r * u(r));
        }
        FourierProfile { radii, weights }
    }

    fn eval(&self, rho: f64) -> f64 {
        let two_pi_rho = 2.0 * std::f64::consts::PI * rho;
        self.radii
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * bessel_j0(two_pi_rho * r))
            .sum()
    }
}

/// A validated kernel specification with its derived constants.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    d: u32,
    lambda: f64,
    range: f64,
    r_fraction: f64,
    max_range: f64,
    kappa: f64,
    first_zero: f64,
    c_check: f64,
    /// Coarse grid for moderate frequencies (lattice eigenvalues).
    fu_coarse: FourierProfile,
    /// Fine grid for the high-frequency tail of the inverse synthesis.
    fu_fine: FourierProfile,
    /// Inverse-Hankel synthesis table for `C_R`: pairs `(rho_i, g_i)` with
    /// `C_R(s) = sum_i g_i J_0(2 pi s rho_i)`. Built on first use.
    synthesis: Arc<OnceLock<Vec<(f64, f64)>>>,
}

impl KernelSpec {
    /// Build a spec from the range fraction `R = r_fraction * M`.
    pub fn from_fraction(d: u32, lambda: f64, r_fraction: f64) -> Result<Self> {
        if !(r_fraction > 0.0 && r_fraction <= 1.0) {
            return Err(Error::InvalidKernel(format!(
                "R_fraction must lie in (0, 1], got {r_fraction}"
            )));
        }
        let m = max_range(lambda, d)?;
        Self::new(d, lambda, r_fraction * m)
    }

    /// Build a spec from the range `R` itself, `0 < R <= M`.
    pub fn new(d: u32, lambda: f64, range: f64) -> Result<Self> {
        if d != 2 {
            // u_R needs J_{(d-2)/2}; only the planar order nu = 0 is wired up.
            return Err(Error::UnsupportedDimension { d });
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "intensity must be positive, got {lambda}"
            )));
        }
        let m = max_range(lambda, d)?;
        if !(range > 0.0 && range <= m * (1.0 + 1e-12)) {
            return Err(Error::InvalidKernel(format!(
                "range R = {range} outside the admissible interval (0, {m}]"
            )));
        }
        let range = range.min(m);
        let j0 = first_bessel_zero(0.0)?;
        // kappa^2 = 4 lambda Gamma(d/2) / (pi^{d/2} R^2 J'_{nu}(j_nu)^2); for
        // d = 2 the derivative is J_0'(j_0) = -J_1(j_0).
        let dj = bessel_j1(j0);
        let kappa = (4.0 * lambda / (std::f64::consts::PI * range * range * dj * dj)).sqrt();

        let u = {
            let scale = 2.0 * j0 / range;
            move |r: f64| kappa * bessel_j0(scale * r)
        };
        let fu_coarse = FourierProfile::build(128, 0.5 * range, u);
        let fu_fine = FourierProfile::build(512, 0.5 * range, u);

        let mut spec = KernelSpec {
            d,
            lambda,
            range,
            r_fraction: range / m,
            max_range: m,
            kappa,
            first_zero: j0,
            c_check: 0.0,
            fu_coarse,
            fu_fine,
            synthesis: Arc::new(OnceLock::new()),
        };
        spec.verify_transform()?;
        spec.c_check = spec.compute_c_check()?;
        if !(spec.c_check > 0.0 && spec.c_check < lambda) {
            return Err(Error::InvalidKernel(format!(
                "derived C-check = {} outside (0, lambda)",
                spec.c_check
            )));
        }
        Ok(spec)
    }

    /// Node-doubling check of the cached transform grids.
    fn verify_transform(&self) -> Result<()> {
        let u = self.u_profile();
        let doubled_coarse = FourierProfile::build(256, 0.5 * self.range, |r| u.value(r));
        let doubled_fine = FourierProfile::build(1024, 0.5 * self.range, |r| u.value(r));
        let mut worst = 0.0f64;
        for &rho_scaled in &[0.0, 0.3, 1.0, 3.0, 10.0, 25.0] {
            let rho = rho_scaled / self.range;
            worst = worst.max((self.fu_coarse.eval(rho) - doubled_coarse.eval(rho)).abs());
        }
        for &rho_scaled in &[0.0, 10.0, 60.0, 120.0, SYNTHESIS_CUTOFF] {
            let rho = rho_scaled / self.range;
            worst = worst.max((self.fu_fine.eval(rho) - doubled_fine.eval(rho)).abs());
        }
        if worst > TRANSFORM_TOL {
            return Err(Error::QuadratureNotConverged {
                achieved: worst,
                requested: TRANSFORM_TOL,
            });
        }
        Ok(())
    }

    /// `C-check = ∫ F(C)^2 = ∫ C^2` (Parseval), by radial quadrature of the
    /// fourth power of `F(u_R)`.
    fn compute_c_check(&self) -> Result<f64> {
        let cutoff = 40.0 / self.range;
        let f = |rho: f64| {
            let fu = self.fourier_u(rho);
            2.0 * std::f64::consts::PI * fu.powi(4) * rho
        };
        integrate_adaptive(f, 0.0, cutoff, 64, TRANSFORM_TOL)
    }

    fn fourier_u(&self, rho: f64) -> f64 {
        if rho * self.range <= 25.0 {
            self.fu_coarse.eval(rho)
        } else {
            self.fu_fine.eval(rho)
        }
    }

    fn synthesis_table(&self) -> &Vec<(f64, f64)> {
        self.synthesis.get_or_init(|| {
            // Panels of width 1/(4R) resolve the squared-Bessel oscillation
            // of F(C_R); 16 Gauss nodes per panel.
            let gl = GaussLegendre::new(16);
            let cutoff = SYNTHESIS_CUTOFF / self.range;
            let panels = (4.0 * SYNTHESIS_CUTOFF).ceil() as usize;
            let width = cutoff / panels as f64;
            let mut table = Vec::with_capacity(panels * gl.nodes.len());
            for p in 0..panels {
                let lo = width * p as f64;
                let half = 0.5 * width;
                let mid = lo + half;
                for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                    let rho = mid + half * x;
                    let fu = self.fourier_u(rho);
                    let g = 2.0 * std::f64::consts::PI * w * half * fu * fu * rho;
                    table.push((rho, g));
                }
            }
            table
        })
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Kernel range `R` (support radius of `C_R`).
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn r_fraction(&self) -> f64 {
        self.r_fraction
    }

    /// Maximum admissible range `M`.
    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// First positive zero of `J_0`.
    pub fn first_zero(&self) -> f64 {
        self.first_zero
    }

    /// `∫ C^2 = ∫ F(C)^2`, the variance deficit relative to Poisson.
    pub fn c_check(&self) -> f64 {
        self.c_check
    }

    pub fn config(&self) -> KernelConfig {
        KernelConfig {
            family: "bessel".into(),
            d: self.d,
            lambda: self.lambda,
            r_fraction: self.r_fraction,
        }
    }

    /// The generating profile `u_R` as a radial function (support `R/2`).
    pub fn u_profile(&self) -> RadialFunction {
        let kappa = self.kappa;
        let scale = 2.0 * self.first_zero / self.range;
        RadialFunction::new(0.5 * self.range, move |r| kappa * bessel_j0(scale * r))
    }

    /// Kernel value `C_R(x)`; exactly zero outside the Euclidean ball of
    /// radius `R`, radially symmetric by construction.
    pub fn kernel_value(&self, x: &[f64]) -> f64 {
        self.kernel_value_radial(norm(x))
    }

    /// Radial kernel value `C_R(r)` via the inverse Hankel synthesis.
    pub fn kernel_value_radial(&self, r: f64) -> f64 {
        if r > self.range {
            return 0.0;
        }
        let table = self.synthesis_table();
        let two_pi_r = 2.0 * std::f64::consts::PI * r;
        table
            .iter()
            .map(|&(rho, g)| g * bessel_j0(two_pi_r * rho))
            .sum()
    }

    /// Fourier transform `F(C_R)(t) = F(u_R)(|t|)^2 >= 0`.
    pub fn fourier_kernel(&self, t: &[f64]) -> f64 {
        self.fourier_kernel_radial(norm(t))
    }

    /// Radial Fourier value `F(C_R)(rho)`.
    pub fn fourier_kernel_radial(&self, rho: f64) -> f64 {
        let fu = self.fourier_u(rho);
        fu * fu
    }

    /// Pair correlation `g(r) = 1 - (C_R(r)/lambda)^2`, clamped to `[0, 1]`.
    pub fn pair_correlation(&self, r: f64) -> f64 {
        if r > self.range {
            return 1.0;
        }
        let c = self.kernel_value_radial(r) / self.lambda;
        (1.0 - c * c).clamp(0.0, 1.0)
    }

    /// Existence / validity report: sup of `F(C)` over a radial grid, the
    /// strictness flags and the derived `C-check`.
    pub fn check_existence(&self, grid_resolution: usize) -> ValidityReport {
        let grid_resolution = grid_resolution.max(2);
        let rho_max = 6.0 / self.range;
        let mut sup = 0.0f64;
        for i in 0..grid_resolution {
            let rho = rho_max * i as f64 / (grid_resolution - 1) as f64;
            sup = sup.max(self.fourier_kernel_radial(rho));
        }
        ValidityReport {
            sup_fourier: sup,
            strict: sup < 1.0 - 1e-6,
            valid: sup <= 1.0 + 1e-6,
            c_check: self.c_check,
        }
    }
}

/// Outcome of the existence check (Fourier criterion).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValidityReport {
    /// Supremum of `F(C)` over the evaluation grid.
    pub sup_fourier: f64,
    /// `sup F(C) < 1`: the strict condition needed for R-dependence and the
    /// median theory.
    pub strict: bool,
    /// `sup F(C) <= 1`: bare existence.
    pub valid: bool,
    /// `∫ C^2` (equals `∫ F(C)^2` by Parseval).
    pub c_check: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
