//! The energy functional in the boundary representation,
//!
//! ```text
//! E(u) = Q(u)/2 − D(u)/(2p) + G(u)/q,
//! Q(u) = ⟨√(−Δ+m²) u, u⟩ + ∫(V − m) u²,
//! D(u) = ∫ (I_α ∗ |u|^p) |u|^p,
//! G(u) = ∫ Γ |u|^q,
//! ```
//!
//! with `V = V_p + V_l`, and the periodic energy `E_per = E − ½∫V_l u²`.

use rand::Rng;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::grid::{apply_multiplier, l2_inner, l2_norm2, shift, Field, Grid};
use crate::operators::{phi_u, ConvolutionKernel, RieszKernel, SqrtOp, DEFAULT_CELL_QUADRATURE_ORDER};
use crate::problem::{sample_potentials, validate, PotentialSpec, ProblemParams};
use crate::random::{random_initial, InitialFamily};

/// Assembled operators and sampled potentials on one grid.
#[derive(Debug, Clone)]
pub struct EnergyContext {
    params: ProblemParams,
    potential: PotentialSpec,
    grid: Grid,
    sqrt_op: SqrtOp,
    kernel: RieszKernel,
    vp: Field,
    vl: Field,
    gamma: Field,
    /// `V_p + V_l`
    v_total: Field,
}

/// The scalar pieces of the functional at one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    pub q: f64,
    pub d: f64,
    pub g: f64,
    /// `∫ V_l u²`
    pub vl: f64,
}

/// Which norm of the gradient field to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum GradNorm {
    /// Grid `L²` norm.
    #[default]
    L2,
    /// `⟨g, (√(−Δ+m²))⁻¹ g⟩^{1/2}`, the `H^{1/2}`-dual norm.
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub q_val: f64,
    pub d_val: f64,
    pub gamma_term: f64,
    pub e_val: f64,
    pub e_per_val: f64,
    pub nehari_residual: f64,
    pub grad_norm: f64,
}

impl EnergyParts {
    pub fn energy(&self, p: f64, q: f64) -> f64 {
        0.5 * self.q - self.d / (2.0 * p) + self.g / q
    }

    /// `E(t u)` from the parts at `u`.
    pub fn energy_along_fiber(&self, t: f64, p: f64, q: f64) -> f64 {
        0.5 * t * t * self.q - t.powf(2.0 * p) * self.d / (2.0 * p) + t.powf(q) * self.g / q
    }

    /// `E'(u)(u) = Q − D + G`.
    pub fn nehari_residual(&self) -> f64 {
        self.q - self.d + self.g
    }
}

/// `|u|^{s−2} u`, with the value 0 at `u = 0`.
fn signed_pow(u: f64, s: f64) -> f64 {
    if s == 2.0 {
        u
    } else if u == 0.0 {
        0.0
    } else {
        u.abs().powf(s - 2.0) * u
    }
}

fn abs_pow(u: f64, s: f64) -> f64 {
    if s == 2.0 {
        u * u
    } else {
        u.abs().powf(s)
    }
}

impl EnergyContext {
    /// Validate and assemble with the corrected Riesz kernel.
    pub fn new(params: ProblemParams, potential: PotentialSpec) -> Result<Self> {
        validate(&params, &potential).into_result()?;
        let grid = params.grid()?;
        let kernel = RieszKernel::new(grid, params.alpha, DEFAULT_CELL_QUADRATURE_ORDER)?;
        Self::with_kernel(params, potential, kernel)
    }

    /// Validate and assemble with a caller-supplied kernel (for example one
    /// built with a different singular-cell treatment).
    pub fn with_kernel(params: ProblemParams, potential: PotentialSpec, kernel: RieszKernel) -> Result<Self> {
        validate(&params, &potential).into_result()?;
        let grid = params.grid()?;
        kernel.grid().check_same(&grid)?;
        if kernel.alpha() != params.alpha {
            return Err(CoreError::InvalidParameter(format!(
                "kernel order {} differs from alpha = {}",
                kernel.alpha(),
                params.alpha
            )));
        }
        let sqrt_op = SqrtOp::new(grid, params.mass)?;
        let (vp, vl, gamma) = sample_potentials(&params, &potential, &grid)?;
        let v_total = vp.add(&vl)?;
        Ok(Self {
            params,
            potential,
            grid,
            sqrt_op,
            kernel,
            vp,
            vl,
            gamma,
            v_total,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sqrt_op(&self) -> &SqrtOp {
        &self.sqrt_op
    }

    pub fn kernel(&self) -> &RieszKernel {
        &self.kernel
    }

    pub fn vp_field(&self) -> &Field {
        &self.vp
    }

    pub fn vl_field(&self) -> &Field {
        &self.vl
    }

    pub fn gamma_field(&self) -> &Field {
        &self.gamma
    }

    /// `V = V_p + V_l` on the grid.
    pub fn v_field(&self) -> &Field {
        &self.v_total
    }

    /// Grid infimum of `V`.
    pub fn v_infimum(&self) -> f64 {
        self.v_total.min()
    }

    fn check(&self, u: &Field) -> Result<()> {
        self.grid.check_same(u.grid())
    }

    fn weighted_square(&self, w: &Field, u: &Field) -> f64 {
        self.grid.cell_volume() * w.values().iter().zip(u.values()).map(|(a, b)| a * b * b).sum::<f64>()
    }

    /// `⟨√(−Δ+m²) u, u⟩ + ∫(V − m) u²`. The `−m` is folded into the symbol
    /// so no cancellation occurs at low frequency.
    pub fn q_boundary(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let au = self.sqrt_op.apply_minus_mass(u)?;
        Ok(l2_inner(&au, u)? + self.weighted_square(&self.v_total, u))
    }

    /// `√Q(u)`, the norm used throughout.
    pub fn q_norm(&self, u: &Field) -> Result<f64> {
        Ok(self.q_boundary(u)?.max(0.0).sqrt())
    }

    pub fn phi(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        phi_u(&self.kernel, u, self.params.p)
    }

    pub fn d_value(&self, u: &Field) -> Result<f64> {
        let phi = self.phi(u)?;
        let p = self.params.p;
        Ok(self.grid.cell_volume()
            * phi.values().iter().zip(u.values()).map(|(f, a)| f * abs_pow(*a, p)).sum::<f64>())
    }

    pub fn gamma_term(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let q = self.params.q;
        Ok(self.grid.cell_volume()
            * self.gamma.values().iter().zip(u.values()).map(|(g, a)| g * abs_pow(*a, q)).sum::<f64>())
    }

    pub fn parts(&self, u: &Field) -> Result<EnergyParts> {
        Ok(EnergyParts {
            q: self.q_boundary(u)?,
            d: self.d_value(u)?,
            g: self.gamma_term(u)?,
            vl: self.weighted_square(&self.vl, u),
        })
    }

    pub fn energy_value(&self, u: &Field) -> Result<f64> {
        Ok(self.parts(u)?.energy(self.params.p, self.params.q))
    }

    /// `E − ½∫V_l u²`.
    pub fn energy_per(&self, u: &Field) -> Result<f64> {
        let parts = self.parts(u)?;
        Ok(parts.energy(self.params.p, self.params.q) - 0.5 * parts.vl)
    }

    pub fn nehari_residual(&self, u: &Field) -> Result<f64> {
        Ok(self.parts(u)?.nehari_residual())
    }

    /// `2p φ_u |u|^{p−2} u`, the `L²` gradient of `D`.
    pub fn d_gradient(&self, u: &Field) -> Result<Field> {
        let phi = self.phi(u)?;
        let p = self.params.p;
        phi.zip_map(u, |f, a| 2.0 * p * f * signed_pow(a, p))
    }

    /// `L²` gradient of `E`:
    /// `√(−Δ+m²)u + (V − m)u − φ_u |u|^{p−2}u + Γ |u|^{q−2}u`.
    pub fn grad_energy(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let (p, q) = (self.params.p, self.params.q);
        let au = self.sqrt_op.apply_minus_mass(u)?;
        let phi = self.phi(u)?;
        let values = (0..self.grid.len())
            .map(|j| {
                let a = u.values()[j];
                au.values()[j] + self.v_total.values()[j] * a - phi.values()[j] * signed_pow(a, p)
                    + self.gamma.values()[j] * signed_pow(a, q)
            })
            .collect();
        Field::new(self.grid, values)
    }

    pub fn grad_norm(&self, g: &Field, norm: GradNorm) -> Result<f64> {
        self.check(g)?;
        match norm {
            GradNorm::L2 => Ok(l2_norm2(g).sqrt()),
            GradNorm::Dual => {
                let mult = self.sqrt_op.multiplier();
                let w = apply_multiplier(g, |k| 1.0 / mult[k]);
                Ok(l2_inner(g, &w)?.max(0.0).sqrt())
            }
        }
    }

    pub fn energy(&self, u: &Field) -> Result<EnergyReport> {
        self.energy_with(u, GradNorm::L2)
    }

    pub fn energy_with(&self, u: &Field, norm: GradNorm) -> Result<EnergyReport> {
        let parts = self.parts(u)?;
        let (p, q) = (self.params.p, self.params.q);
        let e_val = parts.energy(p, q);
        let grad = self.grad_energy(u)?;
        Ok(EnergyReport {
            q_val: parts.q,
            d_val: parts.d,
            gamma_term: parts.g,
            e_val,
            e_per_val: e_val - 0.5 * parts.vl,
            nehari_residual: parts.nehari_residual(),
            grad_norm: self.grad_norm(&grad, norm)?,
        })
    }

    /// `δ_n = |D(u₀ + w_n) − D(w_n) − D(u₀)|` with `w_n = w(· − z_n)`.
    pub fn brezis_lieb_check(&self, u0: &Field, w: &Field, shifts: &[Vec<i64>]) -> Result<BrezisLiebReport> {
        self.check(u0)?;
        self.check(w)?;
        let d0 = self.d_value(u0)?;
        let mut distances = Vec::with_capacity(shifts.len());
        let mut deltas = Vec::with_capacity(shifts.len());
        for z in shifts {
            let wn = shift(w, z)?;
            let un = u0.add(&wn)?;
            let delta = (self.d_value(&un)? - self.d_value(&wn)? - d0).abs();
            distances.push(z.iter().map(|&zi| (zi * zi) as f64).sum::<f64>().sqrt());
            deltas.push(delta);
        }
        Ok(BrezisLiebReport { distances, deltas })
    }

    /// Estimate `C = sup D(u)/Q(u)^p` by preconditioned ascent on the ratio
    /// from `starts` random initials. The returned bound is the best ratio
    /// found, inflated by `safety`.
    pub fn estimate_d_bound<R: Rng + ?Sized>(&self, starts: usize, safety: f64, rng: &mut R) -> Result<DBound> {
        let family = InitialFamily::default();
        let mut best: f64 = 0.0;
        for _ in 0..starts.max(1) {
            let u0 = random_initial(&self.grid, &family, rng);
            best = best.max(self.ascend_ratio(u0, 200)?);
        }
        Ok(DBound {
            constant: best * safety,
            best_ratio: best,
        })
    }

    /// `D(u)/Q(u)^p`, zero for the zero field.
    pub fn d_ratio(&self, u: &Field) -> Result<f64> {
        let q = self.q_boundary(u)?;
        if q <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.d_value(u)? / q.powf(self.params.p))
    }

    fn ascend_ratio(&self, mut u: Field, iters: usize) -> Result<f64> {
        let p = self.params.p;
        let shift0 = self.v_infimum().max(1e-12);
        let mult = self.sqrt_op.multiplier().to_vec();
        let mut ratio = self.d_ratio(&u)?;
        let mut tau: f64 = 0.5;
        for _ in 0..iters {
            let q = self.q_boundary(&u)?;
            let d = self.d_value(&u)?;
            if !(q > 0.0 && d > 0.0) {
                break;
            }
            // ∇ log R = D'/D − p Q'/Q with Q' = 2(Au + (V−m)u)
            let dg = self.d_gradient(&u)?;
            let au = self.sqrt_op.apply_minus_mass(&u)?;
            let qg = au.add(&self.v_total.zip_map(&u, |v, b| v * b)?)?;
            let dir = dg.scaled(1.0 / d).axpy(-2.0 * p / q, &qg)?;
            let dir = apply_multiplier(&dir, |k| 1.0 / (mult[k] - self.params.mass + shift0));
            let scale = (l2_norm2(&u) / l2_norm2(&dir).max(1e-300)).sqrt();
            let mut accepted = false;
            while tau > 1e-10 {
                let trial = u.axpy(tau * scale, &dir)?;
                let r = self.d_ratio(&trial)?;
                if r > ratio {
                    u = trial;
                    ratio = r;
                    tau = (tau * 2.0).min(1.0);
                    accepted = true;
                    break;
                }
                tau *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok(ratio)
    }
}

/// Recorded bound `D(u) ≤ C Q(u)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBound {
    pub constant: f64,
    pub best_ratio: f64,
}

impl DBound {
    pub fn respects(&self, ctx: &EnergyContext, u: &Field) -> Result<bool> {
        Ok(ctx.d_ratio(u)? <= self.constant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrezisLiebReport {
    pub distances: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl BrezisLiebReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.deltas.iter().all(|d| d.is_finite()) && self.deltas.windows(2).all(|w| w[1] < w[0])
    }

    /// Non-increasing up to `jitter` relative growth between neighbours.
    pub fn decreasing_with_jitter(&self, jitter: f64) -> bool {
        self.deltas.iter().all(|d| d.is_finite()) && self.deltas.windows(2).all(|w| w[1] <= w[0] * (1.0 + jitter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LocalShape, LocalizedProfile, PeriodicProfile, SignMode};
    use crate::random::{gaussian, rng, smooth_noise};

    fn params(n: usize, l: f64, q: f64) -> ProblemParams {
        ProblemParams {
            dim: 1,
            mass: 1.0,
            p: 2.0,
            q,
            alpha: 0.5,
            half_period: l,
            points: n,
        }
    }

    fn flat(v0: f64, gamma: PeriodicProfile) -> PotentialSpec {
        PotentialSpec::new(PeriodicProfile::Constant { value: v0 }, LocalizedProfile::zero(), gamma)
    }

    fn cosine_gamma() -> PeriodicProfile {
        PeriodicProfile::Cosine {
            value: 1.0,
            amplitude: 0.5,
        }
    }

    #[test]
    fn constant_field_form() {
        let ctx = EnergyContext::new(params(32, 4.0, 3.0), flat(2.0, PeriodicProfile::Zero)).unwrap();
        let u = Field::constant(*ctx.grid(), 0.5);
        let q = ctx.q_boundary(&u).unwrap();
        assert!((q - 2.0 * 0.25 * 8.0).abs() < 1e-13);
        assert_eq!(ctx.q_boundary(&Field::zeros(*ctx.grid())).unwrap(), 0.0);
    }

    #[test]
    fn cosine_mode_form() {
        let ctx = EnergyContext::new(params(32, 4.0, 3.0), flat(1.5, PeriodicProfile::Zero)).unwrap();
        let xi = std::f64::consts::PI / 4.0;
        let u = Field::from_fn(*ctx.grid(), |x| (xi * x[0]).cos());
        let want = ((xi * xi + 1.0f64).sqrt() - 1.0 + 1.5) * 4.0;
        assert!((ctx.q_boundary(&u).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_field_report_is_zero() {
        let ctx = EnergyContext::new(params(32, 4.0, 3.0), flat(1.0, cosine_gamma())).unwrap();
        let r = ctx.energy(&Field::zeros(*ctx.grid())).unwrap();
        assert_eq!(
            (r.q_val, r.d_val, r.gamma_term, r.e_val, r.e_per_val, r.nehari_residual, r.grad_norm),
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(ctx.grad_energy(&Field::zeros(*ctx.grid())).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn d_matches_brute_force_double_sum() {
        let ctx = EnergyContext::new(params(16, 2.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let g = *ctx.grid();
        let mut u = Field::zeros(g);
        u.values_mut()[5] = 1.3;
        u.values_mut()[6] = -0.4;
        u.values_mut()[11] = 0.7;
        let h = g.cell_volume();
        let n = g.len();
        let mut brute = 0.0;
        for i in 0..n {
            for j in 0..n {
                brute += h * h * ctx.kernel().between(i, j) * u.values()[i].powi(2) * u.values()[j].powi(2);
            }
        }
        let d = ctx.d_value(&u).unwrap();
        assert!((d - brute).abs() < 1e-10 * brute.max(1.0), "{d} {brute}");
    }

    #[test]
    fn d_homogeneity() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let u = smooth_noise(ctx.grid(), 0.7, &mut rng(1));
        let d1 = ctx.d_value(&u).unwrap();
        let d2 = ctx.d_value(&u.scaled(2.0)).unwrap();
        assert!((d2 - 16.0 * d1).abs() < 1e-11 * d2);
        assert_eq!(ctx.d_value(&Field::zeros(*ctx.grid())).unwrap(), 0.0);
    }

    #[test]
    fn fiber_closed_form() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let u = gaussian(ctx.grid(), &[0.0], 1.0, 1.0);
        let q = ctx.q_boundary(&u).unwrap();
        let d = ctx.d_value(&u).unwrap();
        for i in 1..=20 {
            let t = 0.15 * i as f64;
            let e = ctx.energy_value(&u.scaled(t)).unwrap();
            let want = t * t * q / 2.0 - t.powi(4) * d / 4.0;
            assert!((e - want).abs() < 1e-11 * want.abs().max(1.0), "t = {t}");
        }
    }

    #[test]
    fn energy_and_periodic_energy_agree_without_localized_part() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, cosine_gamma())).unwrap();
        let u = smooth_noise(ctx.grid(), 0.7, &mut rng(2));
        let r = ctx.energy(&u).unwrap();
        assert_eq!(r.e_val, r.e_per_val);
        assert_eq!(r.e_val, r.q_val / 2.0 - r.d_val / 4.0 + r.gamma_term / 3.0);
    }

    #[test]
    fn periodic_energy_drops_localized_term() {
        let vl = LocalizedProfile {
            sign: SignMode::Negative,
            shape: LocalShape::Gaussian {
                amplitude: -0.3,
                width: 1.0,
                center: vec![0.0],
            },
            integrability: None,
        };
        let pot = flat(1.0, cosine_gamma()).with_localized(vl);
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), pot.clone()).unwrap();
        let per = EnergyContext::new(params(64, 4.0, 3.0), pot.periodic_part()).unwrap();
        let u = gaussian(ctx.grid(), &[0.5], 1.0, 1.0);
        let e_per = ctx.energy_per(&u).unwrap();
        let e_strip = per.energy_value(&u).unwrap();
        assert!((e_per - e_strip).abs() < 1e-13 * e_strip.abs());
        assert!(ctx.energy_value(&u).unwrap() < e_per);
    }

    #[test]
    fn shift_invariance_of_energy() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, cosine_gamma())).unwrap();
        let u = smooth_noise(ctx.grid(), 0.7, &mut rng(3));
        let e = ctx.energy_value(&u).unwrap();
        for z in [1i64, -3, 5] {
            let es = ctx.energy_value(&shift(&u, &[z]).unwrap()).unwrap();
            assert!((es - e).abs() <= 1e-13 * e.abs(), "{z}: {es} vs {e}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, cosine_gamma())).unwrap();
        let mut r = rng(4);
        for _ in 0..10 {
            let u = smooth_noise(ctx.grid(), 0.7, &mut r);
            let w = smooth_noise(ctx.grid(), 0.7, &mut r);
            let eps = 1e-5;
            let fd = (ctx.energy_value(&u.axpy(eps, &w).unwrap()).unwrap()
                - ctx.energy_value(&u.axpy(-eps, &w).unwrap()).unwrap())
                / (2.0 * eps);
            let an = l2_inner(&ctx.grad_energy(&u).unwrap(), &w).unwrap();
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} {an}");
        }
    }

    #[test]
    fn nehari_residual_recombination() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, cosine_gamma())).unwrap();
        let u = smooth_noise(ctx.grid(), 0.7, &mut rng(5));
        let r = ctx.energy(&u).unwrap();
        let ip = l2_inner(&ctx.grad_energy(&u).unwrap(), &u).unwrap();
        assert!((r.nehari_residual - ip).abs() <= 1e-10 * r.q_val);
    }

    #[test]
    fn nonlocal_derivative_is_continuous() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let mut r = rng(6);
        let u = smooth_noise(ctx.grid(), 0.7, &mut r);
        let dirn = smooth_noise(ctx.grid(), 0.7, &mut r);
        let psi = smooth_noise(ctx.grid(), 0.7, &mut r);
        let base = l2_inner(&ctx.d_gradient(&u).unwrap(), &psi).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..6 {
            let un = u.axpy(10f64.powi(-k), &dirn).unwrap();
            let gap = (l2_inner(&ctx.d_gradient(&un).unwrap(), &psi).unwrap() - base).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-4 * base.abs().max(1.0));
    }

    #[test]
    fn dual_norm_is_smaller_than_scaled_l2() {
        let ctx = EnergyContext::new(params(64, 4.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let g = smooth_noise(ctx.grid(), 0.3, &mut rng(7));
        let l2 = ctx.grad_norm(&g, GradNorm::L2).unwrap();
        let dual = ctx.grad_norm(&g, GradNorm::Dual).unwrap();
        assert!(dual > 0.0 && dual <= l2 + 1e-15);
    }

    #[test]
    fn brezis_lieb_trivial_cases() {
        let ctx = EnergyContext::new(params(256, 16.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let u0 = gaussian(ctx.grid(), &[0.0], 1.0, 1.0);
        let zero = Field::zeros(*ctx.grid());
        let shifts: Vec<Vec<i64>> = vec![vec![2], vec![4]];
        assert!(ctx.brezis_lieb_check(&u0, &zero, &shifts).unwrap().deltas.iter().all(|d| *d == 0.0));
        let r = ctx.brezis_lieb_check(&zero, &u0, &shifts).unwrap();
        assert!(r.deltas.iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn brezis_lieb_separated_gaussians() {
        let ctx = EnergyContext::new(params(256, 16.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let u0 = gaussian(ctx.grid(), &[0.0], 1.0, 1.0);
        let w = gaussian(ctx.grid(), &[0.0], 0.8, 0.7);
        let shifts: Vec<Vec<i64>> = [2, 4, 6, 8].iter().map(|&z| vec![z]).collect();
        let r = ctx.brezis_lieb_check(&u0, &w, &shifts).unwrap();
        assert!(r.strictly_decreasing(), "{:?}", r.deltas);
    }

    #[test]
    fn d_bound_covers_random_fields() {
        let ctx = EnergyContext::new(params(64, 8.0, 3.0), flat(1.0, PeriodicProfile::Zero)).unwrap();
        let mut r = rng(8);
        let bound = ctx.estimate_d_bound(3, 1.05, &mut r).unwrap();
        assert!(bound.constant > 0.0);
        for _ in 0..20 {
            let u = smooth_noise(ctx.grid(), 0.7, &mut r);
            assert!(bound.respects(&ctx, &u).unwrap());
            let g = gaussian(ctx.grid(), &[0.0], r.random_range(0.3..3.0), 1.0);
            assert!(bound.respects(&ctx, &g).unwrap());
        }
    }

    #[test]
    fn invalid_problem_is_rejected() {
        let bad = ProblemParams {
            alpha: 1.5,
            ..params(32, 4.0, 3.0)
        };
        assert!(EnergyContext::new(bad, flat(1.0, PeriodicProfile::Zero)).is_err());
        assert!(EnergyContext::new(params(32, 4.0, 3.0), flat(-1.0, PeriodicProfile::Zero)).is_err());
    }
}
