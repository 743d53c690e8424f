//! Seeded random fields: smooth noise and Gaussian initial guesses.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{apply_multiplier, Field, Grid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// White noise filtered by `exp(-|ξ|² ℓ² / 2)`, scaled to unit max-abs.
pub fn smooth_noise<R: Rng + ?Sized>(grid: &Grid, corr_len: f64, rng: &mut R) -> Field {
    let values: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let white = Field::from_raw(*grid, values);
    let g = *grid;
    let smooth = apply_multiplier(&white, |k| (-0.5 * g.freq_norm2(k) * corr_len * corr_len).exp());
    let scale = smooth.max_abs();
    if scale > 0.0 {
        smooth.scaled(1.0 / scale)
    } else {
        smooth
    }
}

/// `amplitude · exp(-|x - c|² / (2 width²))` with the minimum-image distance.
pub fn gaussian(grid: &Grid, center: &[f64], width: f64, amplitude: f64) -> Field {
    let g = *grid;
    Field::from_fn(g, |x| {
        let r = crate::grid::torus_distance(&g, x, center);
        amplitude * (-(r * r) / (2.0 * width * width)).exp()
    })
}

/// Family of randomized initial guesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialFamily {
    pub width_min: f64,
    pub width_max: f64,
    /// Centres are drawn from `[-spread, spread]^N`.
    pub center_spread: f64,
    /// Relative amplitude of the additive smooth noise.
    pub noise: f64,
    pub noise_corr_len: f64,
}

impl Default for InitialFamily {
    fn default() -> Self {
        Self {
            width_min: 0.7,
            width_max: 2.5,
            center_spread: 2.0,
            noise: 0.05,
            noise_corr_len: 1.0,
        }
    }
}

/// Gaussian with random width and centre, plus smooth noise of relative
/// size `family.noise`.
pub fn random_initial<R: Rng + ?Sized>(grid: &Grid, family: &InitialFamily, rng: &mut R) -> Field {
    let width = rng.random_range(family.width_min..=family.width_max);
    let center: Vec<f64> = (0..grid.dim())
        .map(|_| rng.random_range(-family.center_spread..=family.center_spread))
        .collect();
    let bump = gaussian(grid, &center, width, 1.0);
    if family.noise == 0.0 {
        return bump;
    }
    let noise = smooth_noise(grid, family.noise_corr_len, rng);
    bump.axpy(family.noise, &noise).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_fields_are_reproducible() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let a = random_initial(&g, &InitialFamily::default(), &mut rng(7));
        let b = random_initial(&g, &InitialFamily::default(), &mut rng(7));
        let c = random_initial(&g, &InitialFamily::default(), &mut rng(8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn smooth_noise_has_unit_peak_and_little_high_frequency_content() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let f = smooth_noise(&g, 1.0, &mut rng(1));
        assert!((f.max_abs() - 1.0).abs() < 1e-15);
        let s = f.forward();
        let high: f64 = (0..g.len())
            .filter(|&k| g.freq_norm2(k) > 64.0)
            .map(|k| s.coeffs()[k].norm())
            .fold(0.0, f64::max);
        assert!(high < 1e-12, "{high}");
    }

    #[test]
    fn gaussian_peaks_at_center() {
        let g = Grid::new(2, 4.0, 32).unwrap();
        let f = gaussian(&g, &[1.0, -1.0], 0.8, 2.0);
        let j = f.argmax_abs();
        assert_eq!(&g.coords(j)[..2], &[1.0, -1.0]);
        assert_eq!(f.max(), 2.0);
    }
}
