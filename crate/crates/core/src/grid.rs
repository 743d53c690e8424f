//! Periodic box `[-L, L)^N` with `n` nodes per axis.
//!
//! Fields are stored row-major (last axis fastest). Spectral coefficients use
//! the mean normalization: the coefficient at zero frequency is the grid mean
//! of the field, and `f(x_j) = Σ_k c_k exp(i ξ_k · x_j)` with phases measured
//! from the origin (not from the first node).

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_period: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, half_period: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(CoreError::InvalidParameter(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "half-period must be positive (got {half_period})"
            )));
        }
        if points < 2 || !points.is_multiple_of(2) {
            return Err(CoreError::InvalidParameter(format!(
                "points per axis must be even (got {points})"
            )));
        }
        Ok(Self {
            dim,
            half_period,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half-period `L`; the box is `[-L, L)` per axis.
    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.points as f64
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Box measure `(2L)^N`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_period).powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of cells per physical unit, if integral.
    pub fn cells_per_unit(&self) -> Option<usize> {
        let c = 1.0 / self.spacing();
        let r = c.round();
        ((c - r).abs() < 1e-9 && r >= 1.0).then_some(r as usize)
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_period + j as f64 * self.spacing()
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rem % self.points;
            rem /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.points + i)
    }

    /// Physical coordinates of a flat node index.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.node(idx[a]);
        }
        x
    }

    /// Signed DFT index in `[-n/2, n/2)`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        std::f64::consts::PI * self.signed_index(k) as f64 / self.half_period
    }

    /// `|ξ|²` for a flat spectral index.
    pub fn freq_norm2(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        (0..self.dim).map(|a| self.wavenumber(idx[a]).powi(2)).sum()
    }

    /// Flat spectral index of `-ξ`.
    pub fn negated_index(&self, flat: usize) -> usize {
        let idx = self.multi_index(flat);
        let mut neg = [0usize; 3];
        for a in 0..self.dim {
            neg[a] = (self.points - idx[a]) % self.points;
        }
        self.flat_index(&neg[..self.dim])
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Unnormalized in-place N-dimensional DFT.
    pub(crate) fn fft_in_place(&self, data: &mut [Complex64], direction: FftDirection) {
        let n = self.points;
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let total = self.len();
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    fft.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = stride * n;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, &v) in line.iter().enumerate() {
                        data[base + j * stride] = v;
                    }
                }
            }
        }
    }
}

/// Real grid function on the periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

/// Discrete Fourier coefficients of a grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "non-finite field value at index {bad}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Construct without the finiteness scan. Used internally where values are
    /// produced by arithmetic on finite inputs.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|j| {
                let x = grid.coords(j);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scaled(&self, t: f64) -> Field {
        self.map(|v| t * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + t·other`
    pub fn axpy(&self, t: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + t * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (j, v) in self.values.iter().enumerate() {
            if v.abs() > best_val {
                best_val = v.abs();
                best = j;
            }
        }
        best
    }

    /// Grid integral `h^N Σ f_j`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn forward(&self) -> SpectralField {
        forward(self)
    }
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(CoreError::SizeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Multiply coefficient `k` by `symbol(k)`.
    pub fn multiply(&mut self, symbol: impl Fn(usize) -> f64) {
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            *c *= symbol(k);
        }
    }

    /// Largest violation of `c(-ξ) = conj(c(ξ))`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|k| {
                let kn = self.grid.negated_index(k);
                (self.coeffs[k] - self.coeffs[kn].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn inverse(&self) -> Field {
        inverse(self)
    }
}

pub fn forward(f: &Field) -> SpectralField {
    let grid = f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_in_place(&mut data, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    for (k, c) in data.iter_mut().enumerate() {
        *c *= scale * origin_phase(&grid, k);
    }
    SpectralField { grid, coeffs: data }
}

// exp(-i ξ_k · x_0) with x_0 = (-L, ..): (-1)^(k_1 + .. + k_N) since n is even
fn origin_phase(grid: &Grid, k: usize) -> f64 {
    let idx = grid.multi_index(k);
    if idx[..grid.dim()].iter().sum::<usize>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Inverse transform; the imaginary part is discarded.
pub fn inverse(s: &SpectralField) -> Field {
    let grid = s.grid;
    let mut data: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * origin_phase(&grid, k))
        .collect();
    grid.fft_in_place(&mut data, FftDirection::Inverse);
    Field::from_raw(grid, data.into_iter().map(|c| c.re).collect())
}

/// Apply a real, even Fourier multiplier.
pub fn apply_multiplier(f: &Field, symbol: impl Fn(usize) -> f64) -> Field {
    let mut s = forward(f);
    s.multiply(symbol);
    inverse(&s)
}

pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.grid.cell_volume() * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>())
}

pub fn l2_norm2(f: &Field) -> f64 {
    f.grid.cell_volume() * f.values.iter().map(|a| a * a).sum::<f64>()
}

/// Number of cells corresponding to an integer physical displacement.
pub fn shift_cells(grid: &Grid, z: &[i64]) -> Result<Vec<i64>> {
    if z.len() != grid.dim() {
        return Err(CoreError::InvalidParameter(format!(
            "shift has {} components, grid dimension is {}",
            z.len(),
            grid.dim()
        )));
    }
    let per_unit = grid.cells_per_unit().ok_or(CoreError::NonIntegralShift {
        shift: z.to_vec(),
        h: grid.spacing(),
    })?;
    Ok(z.iter().map(|&zi| zi * per_unit as i64).collect())
}

/// Exact circular translation `f(· - z)` by an integer vector `z`.
pub fn shift(f: &Field, z: &[i64]) -> Result<Field> {
    let cells = shift_cells(&f.grid, z)?;
    Ok(shift_by_cells(f, &cells))
}

/// Circular translation by whole cells: `out[j] = f[j - cells]`.
pub fn shift_by_cells(f: &Field, cells: &[i64]) -> Field {
    let grid = f.grid;
    let n = grid.points() as i64;
    let mut out = vec![0.0; grid.len()];
    for (j, slot) in out.iter_mut().enumerate() {
        let idx = grid.multi_index(j);
        let mut src = [0usize; 3];
        for a in 0..grid.dim() {
            src[a] = (idx[a] as i64 - cells[a]).rem_euclid(n) as usize;
        }
        *slot = f.values[grid.flat_index(&src[..grid.dim()])];
    }
    Field::from_raw(grid, out)
}

/// Periodic centre of mass of `|f|²` per axis (circular mean), in `[-L, L)`.
pub fn periodic_center(f: &Field) -> Vec<f64> {
    let grid = f.grid;
    let l = grid.half_period();
    let mut sums = vec![Complex64::new(0.0, 0.0); grid.dim()];
    for (j, v) in f.values.iter().enumerate() {
        let w = v * v;
        let x = grid.coords(j);
        for a in 0..grid.dim() {
            let theta = std::f64::consts::PI * x[a] / l;
            sums[a] += Complex64::from_polar(w, theta);
        }
    }
    sums.iter()
        .map(|s| if s.norm() == 0.0 { 0.0 } else { s.arg() * l / std::f64::consts::PI })
        .collect()
}

/// Spectral reflection `f(2c − ·)` through the point `c`. Exact when `2c`
/// is a multiple of the spacing; otherwise the Nyquist mode, which cannot
/// be rotated on the grid, is scaled by `cos(2ξc)`.
pub fn reflect_about(f: &Field, center: &[f64]) -> Result<Field> {
    let grid = f.grid;
    if center.len() != grid.dim() {
        return Err(CoreError::InvalidParameter(format!(
            "centre has {} components, grid dimension is {}",
            center.len(),
            grid.dim()
        )));
    }
    let s = forward(f);
    let coeffs = (0..grid.len())
        .map(|k| {
            let idx = grid.multi_index(k);
            let phase: f64 = (0..grid.dim()).map(|a| grid.wavenumber(idx[a]) * center[a]).sum();
            s.coeffs[grid.negated_index(k)] * Complex64::from_polar(1.0, -2.0 * phase)
        })
        .collect();
    Ok(inverse(&SpectralField { grid, coeffs }))
}

/// Copy `f` onto a box of another size with the same spacing, centred on
/// the origin: zero padding when the target is larger, cropping when it is
/// smaller.
pub fn embed(f: &Field, target: &Grid) -> Result<Field> {
    let src = f.grid;
    if src.dim() != target.dim() || (src.spacing() - target.spacing()).abs() > 1e-12 * src.spacing() {
        return Err(CoreError::GridMismatch(format!(
            "embedding needs equal dimension and spacing: {src:?} vs {target:?}"
        )));
    }
    let offset = (target.points() as i64 - src.points() as i64) / 2;
    let n_src = src.points() as i64;
    let mut out = vec![0.0; target.len()];
    'nodes: for (j, slot) in out.iter_mut().enumerate() {
        let idx = target.multi_index(j);
        let mut from = [0usize; 3];
        for a in 0..src.dim() {
            let i = idx[a] as i64 - offset;
            if !(0..n_src).contains(&i) {
                continue 'nodes;
            }
            from[a] = i as usize;
        }
        *slot = f.values[src.flat_index(&from[..src.dim()])];
    }
    Ok(Field::from_raw(*target, out))
}

/// Minimum-image distance on the box torus.
pub fn torus_distance(grid: &Grid, x: &[f64], y: &[f64]) -> f64 {
    let period = 2.0 * grid.half_period();
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(period);
            d.min(period - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_raw(grid, (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn constant_field_has_only_mean_coefficient() {
        let grid = Grid::new(2, 2.0, 8).unwrap();
        let s = forward(&Field::constant(grid, 3.5));
        assert!((s.coeffs()[0] - Complex64::new(3.5, 0.0)).norm() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn cosine_mode_splits_into_two_halves() {
        let l = 3.0;
        let grid = Grid::new(1, l, 16).unwrap();
        let c = 1.7;
        let f = Field::from_fn(grid, |x| c * (PI * x[0] / l).cos());
        let s = forward(&f);
        for (k, coef) in s.coeffs().iter().enumerate() {
            let expected = match grid.signed_index(k) {
                1 | -1 => c / 2.0,
                _ => 0.0,
            };
            assert!((coef.re - expected).abs() < 1e-13 && coef.im.abs() < 1e-13, "k={k} {coef}");
        }
        assert!((l2_norm2(&f) - c * c * l).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_parseval() {
        for (dim, n) in [(1, 64), (2, 16), (3, 8)] {
            let grid = Grid::new(dim, 2.0, n).unwrap();
            let f = random_field(grid, 7 + dim as u64);
            let s = forward(&f);
            let back = inverse(&s);
            let err = f.sub(&back).unwrap().max_abs() / f.max_abs();
            assert!(err < 1e-12, "round trip {err}");
            let parseval = grid.volume() * s.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
            assert!((parseval - l2_norm2(&f)).abs() < 1e-12 * l2_norm2(&f));
            assert!(s.hermitian_defect() < 1e-14);
        }
    }

    #[test]
    fn unit_box_measure() {
        let grid = Grid::new(1, 1.0, 8).unwrap();
        assert!((l2_norm2(&Field::constant(grid, 1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn shifts_are_exact_permutations() {
        let grid = Grid::new(2, 2.0, 16).unwrap();
        let f = random_field(grid, 3);
        assert_eq!(shift(&f, &[0, 0]).unwrap(), f);
        assert_eq!(shift(&f, &[4, 0]).unwrap(), f);
        let g = shift(&f, &[1, -1]).unwrap();
        assert_eq!(l2_norm2(&g).to_bits(), {
            // same multiset of entries, summed in a different order
            let mut a = f.values().to_vec();
            let mut b = g.values().to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
            l2_norm2(&g).to_bits()
        });
        let composed = shift(&shift(&f, &[1, 2]).unwrap(), &[-3, 1]).unwrap();
        assert_eq!(composed, shift(&f, &[-2, 3]).unwrap());
    }

    #[test]
    fn shift_moves_bump_forward() {
        let grid = Grid::new(1, 4.0, 32).unwrap();
        let f = Field::from_fn(grid, |x| (-(x[0] * x[0])).exp());
        let g = shift(&f, &[1]).unwrap();
        let xmax = grid.coords(g.argmax_abs())[0];
        assert!((xmax - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_cells_rejected() {
        let grid = Grid::new(1, 3.0, 8).unwrap();
        let f = Field::zeros(grid);
        assert!(matches!(shift(&f, &[1]), Err(CoreError::NonIntegralShift { .. })));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Field::zeros(Grid::new(1, 1.0, 8).unwrap());
        let b = Field::zeros(Grid::new(1, 1.0, 16).unwrap());
        assert!(l2_inner(&a, &b).is_err());
        assert!(SpectralField::new(*a.grid(), vec![]).is_err());
    }

    #[test]
    fn periodic_center_of_shifted_bump() {
        let grid = Grid::new(1, 8.0, 64).unwrap();
        let f = Field::from_fn(grid, |x| (-(x[0] - 7.5).powi(2)).exp() + (-(x[0] + 8.5).powi(2)).exp());
        let c = periodic_center(&f)[0];
        assert!(torus_distance(&grid, &[c], &[7.5]) < 1e-6, "{c}");
    }

    #[test]
    fn reflection_fixes_a_centred_even_bump() {
        let grid = Grid::new(1, 8.0, 128).unwrap();
        let c = 1.3;
        let f = Field::from_fn(grid, |x| (-(x[0] - c).powi(2)).exp());
        let r = reflect_about(&f, &[c]).unwrap();
        assert!(f.sub(&r).unwrap().max_abs() < 1e-12);
        let moved = reflect_about(&f, &[0.0]).unwrap();
        let expected = Field::from_fn(grid, |x| (-(x[0] + c).powi(2)).exp());
        assert!(moved.sub(&expected).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn embedding_pads_and_crops_about_the_origin() {
        let small = Grid::new(2, 2.0, 16).unwrap();
        let large = Grid::new(2, 4.0, 32).unwrap();
        let f = random_field(small, 3);
        let big = embed(&f, &large).unwrap();
        assert_eq!(embed(&big, &small).unwrap(), f);
        assert!((l2_norm2(&big) - l2_norm2(&f)).abs() < 1e-12);
        let j = large.flat_index(&[0, 0]);
        assert_eq!(big.values()[j], 0.0);
        assert!(embed(&f, &Grid::new(2, 4.0, 16).unwrap()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn shift_composition(z1 in -6i64..6, z2 in -6i64..6, seed in 0u64..1000) {
            let grid = Grid::new(1, 2.0, 16).unwrap();
            let f = random_field(grid, seed);
            let lhs = shift(&shift(&f, &[z2]).unwrap(), &[z1]).unwrap();
            let rhs = shift(&f, &[z1 + z2]).unwrap();
            proptest::prop_assert_eq!(lhs, rhs);
        }
    }
}
