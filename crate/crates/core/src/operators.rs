//! The semirelativistic operator `√(−Δ + m²)` and the Riesz convolution.
//!
//! Both act by spectral multiplication. The Riesz kernel `|x|^{α−N}` is
//! sampled in real space at minimum-image offsets on the box, with the
//! singular cell at the origin replaced by the exact cell average of the
//! kernel, and transformed once.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{CoreError, Result};
use crate::grid::{apply_multiplier, Field, Grid};
use crate::quadrature::tensor_integral;

pub const DEFAULT_CELL_QUADRATURE_ORDER: usize = 16;

/// Spectral multiplier `√(|ξ|² + m²)`.
#[derive(Debug, Clone)]
pub struct SqrtOp {
    grid: Grid,
    mass: f64,
    multiplier: Vec<f64>,
}

impl SqrtOp {
    pub fn new(grid: Grid, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(CoreError::InvalidParameter(format!("mass must be positive (got {mass})")));
        }
        let multiplier = (0..grid.len())
            .map(|k| (grid.freq_norm2(k) + mass * mass).sqrt())
            .collect();
        Ok(Self {
            grid,
            mass,
            multiplier,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        Ok(apply_multiplier(u, |k| self.multiplier[k]))
    }

    /// `√(−Δ + m²) u − m u`, computed spectrally so the zero mode is exactly 0.
    pub fn apply_minus_mass(&self, u: &Field) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        let m = self.mass;
        Ok(apply_multiplier(u, |k| {
            // √(ξ²+m²) − m = ξ² / (√(ξ²+m²) + m), avoids cancellation at small ξ
            let xi2 = self.grid.freq_norm2(k);
            xi2 / (self.multiplier[k] + m)
        }))
    }
}

pub fn apply_sqrt(op: &SqrtOp, u: &Field) -> Result<Field> {
    op.apply(u)
}

pub fn apply_sqrt_minus_m(op: &SqrtOp, u: &Field) -> Result<Field> {
    op.apply_minus_mass(u)
}

/// How the sample at zero offset is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularCell {
    /// Exact average of `|x|^{α−N}` over the cell `[−h/2, h/2]^N`.
    CellAverage,
    /// Zero-offset sample dropped.
    Omitted,
    /// Raw point sample at the origin (infinite). Fault injection only.
    Uncorrected,
}

/// A real, even convolution kernel realized by a spectral multiplier.
pub trait ConvolutionKernel {
    fn grid(&self) -> &Grid;

    /// `h^N Σ_j K(d_j) e^{−i ξ_k · d_j}` for every frequency `k`.
    fn conv_multiplier(&self) -> &[f64];

    fn convolve(&self, f: &Field) -> Result<Field> {
        self.grid().check_same(f.grid())?;
        let mult = self.conv_multiplier();
        Ok(apply_multiplier(f, |k| mult[k]))
    }
}

/// Sampled, box-periodized Riesz kernel `I_α = |x|^{α−N}`.
#[derive(Debug, Clone)]
pub struct RieszKernel {
    grid: Grid,
    alpha: f64,
    correction: SingularCell,
    samples: Vec<f64>,
    conv_multiplier: Vec<f64>,
    near_exponent: f64,
    near_part_norm: f64,
    far_part_bound: f64,
}

/// Average of `|x|^{α−N}` over `[−h/2, h/2]^N`.
///
/// Split the cube into `2N` pyramids with apex at the origin; on each, the
/// radial integral is `1/α` in closed form and the remaining face integral
/// has a smooth integrand.
pub fn singular_cell_average(dim: usize, alpha: f64, h: f64, order: usize) -> f64 {
    let nf = dim as f64;
    let face = if dim == 1 {
        0.5_f64.powf(alpha - 1.0)
    } else {
        tensor_integral(dim - 1, -0.5, 0.5, order, |y| {
            let r2 = 0.25 + y.iter().map(|v| v * v).sum::<f64>();
            r2.powf(0.5 * (alpha - nf))
        })
    };
    let unit = 2.0 * nf * face / (2.0 * alpha);
    unit * h.powf(alpha - nf)
}

/// Open exponent window `(lo, hi)` on which `I_α χ_{B(0,1)} ∈ L^t`.
pub fn lt_window(dim: usize, p: f64, alpha: f64) -> (f64, f64) {
    let nf = dim as f64;
    let denom = nf * (2.0 - p) + p;
    let lo = if denom > 0.0 { 1.0_f64.max(nf / denom) } else { f64::INFINITY };
    let hi = nf / (nf - alpha);
    (lo, hi)
}

/// Whole-space Fourier symbol of `|x|^{α−N}`: `π^{N/2} 2^α Γ(α/2)/Γ((N−α)/2) |ξ|^{−α}`.
pub fn continuum_symbol(dim: usize, alpha: f64, xi_norm: f64) -> f64 {
    let nf = dim as f64;
    let c = PI.powf(nf / 2.0) * 2.0_f64.powf(alpha) * gamma(alpha / 2.0) / gamma((nf - alpha) / 2.0);
    c * xi_norm.powf(-alpha)
}

impl RieszKernel {
    pub fn new(grid: Grid, alpha: f64, cell_quadrature_order: usize) -> Result<Self> {
        Self::with_correction(grid, alpha, cell_quadrature_order, SingularCell::CellAverage)
    }

    pub fn with_correction(
        grid: Grid,
        alpha: f64,
        cell_quadrature_order: usize,
        correction: SingularCell,
    ) -> Result<Self> {
        let nf = grid.dim() as f64;
        if !(alpha > 0.0 && alpha < nf) {
            return Err(CoreError::InvalidParameter(format!(
                "Riesz order must lie in (0, N) = (0, {nf}); got {alpha}"
            )));
        }
        let h = grid.spacing();
        let samples: Vec<f64> = (0..grid.len())
            .map(|j| {
                let d2 = offset_norm2(&grid, j);
                if j == 0 {
                    match correction {
                        SingularCell::CellAverage => {
                            singular_cell_average(grid.dim(), alpha, h, cell_quadrature_order)
                        }
                        SingularCell::Omitted => 0.0,
                        SingularCell::Uncorrected => f64::INFINITY,
                    }
                } else {
                    d2.powf(0.5 * (alpha - nf))
                }
            })
            .collect();

        let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.fft_in_place(&mut data, FftDirection::Forward);
        let w = grid.cell_volume();
        let conv_multiplier = data.iter().map(|c| w * c.re).collect();

        let near_exponent = 0.5 * (1.0 + nf / (nf - alpha));
        let mut near = 0.0;
        let mut far = 0.0_f64;
        for (j, &k) in samples.iter().enumerate() {
            if offset_norm2(&grid, j) < 1.0 {
                near += k.powf(near_exponent);
            } else {
                far = far.max(k);
            }
        }
        Ok(Self {
            grid,
            alpha,
            correction,
            samples,
            conv_multiplier,
            near_exponent,
            near_part_norm: (w * near).powf(1.0 / near_exponent),
            far_part_bound: far,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn correction(&self) -> SingularCell {
        self.correction
    }

    /// Kernel values at the minimum-image offsets, indexed like the grid
    /// (index 0 is the zero offset).
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Exponent `t` used for [`Self::near_part_norm`].
    pub fn near_exponent(&self) -> f64 {
        self.near_exponent
    }

    /// Grid `L^t` norm of the part of the kernel inside the unit ball.
    pub fn near_part_norm(&self) -> f64 {
        self.near_part_norm
    }

    /// `L^t` norm of the near part for a caller-chosen `t`.
    pub fn near_part_norm_at(&self, t: f64) -> f64 {
        let s: f64 = self
            .samples
            .iter()
            .enumerate()
            .filter(|(j, _)| offset_norm2(&self.grid, *j) < 1.0)
            .map(|(_, k)| k.powf(t))
            .sum();
        (self.grid.cell_volume() * s).powf(1.0 / t)
    }

    /// Supremum of the kernel outside the unit ball.
    pub fn far_part_bound(&self) -> f64 {
        self.far_part_bound
    }

    /// Kernel value for the displacement between flat nodes `i` and `j`.
    pub fn between(&self, i: usize, j: usize) -> f64 {
        let n = self.grid.points();
        let a = self.grid.multi_index(i);
        let b = self.grid.multi_index(j);
        let mut d = [0usize; 3];
        for ax in 0..self.grid.dim() {
            d[ax] = (a[ax] + n - b[ax]) % n;
        }
        self.samples[self.grid.flat_index(&d[..self.grid.dim()])]
    }
}

impl ConvolutionKernel for RieszKernel {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn conv_multiplier(&self) -> &[f64] {
        &self.conv_multiplier
    }
}

fn offset_norm2(grid: &Grid, j: usize) -> f64 {
    let idx = grid.multi_index(j);
    let h = grid.spacing();
    (0..grid.dim())
        .map(|a| (grid.signed_index(idx[a]) as f64 * h).powi(2))
        .sum()
}

pub fn build_riesz(grid: Grid, alpha: f64, cell_quadrature_order: usize) -> Result<RieszKernel> {
    RieszKernel::new(grid, alpha, cell_quadrature_order)
}

/// Circular convolution `h^N Σ_j K(x_i − x_j) f_j`.
pub fn riesz_convolve(kernel: &RieszKernel, f: &Field) -> Result<Field> {
    kernel.convolve(f)
}

/// `φ_u = I_α ∗ |u|^p`.
pub fn phi_u(kernel: &RieszKernel, u: &Field, p: f64) -> Result<Field> {
    if p < 2.0 {
        return Err(CoreError::InvalidParameter(format!("p must be >= 2 (got {p})")));
    }
    kernel.convolve(&u.map(|v| v.abs().powf(p)))
}
