//! Nehari manifold: fibers `t ↦ E(t u)`, the projection `t(u)` and the
//! ground level.
//!
//! Along a fiber the functional is scalar,
//! `E(t u) = t²Q/2 − t^{2p} D/(2p) + t^q G/q`, and `E'(tu)(tu) = t² g(t)` with
//! `g(t) = Q − t^{2p−2} D + t^{q−2} G`. Since `2p − 2 > q − 2 > 0`,
//! `g(t)/t^{q−2}` is strictly decreasing, so `g` has exactly one positive
//! root when `D > 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{DBound, EnergyContext, EnergyParts};
use crate::error::{CoreError, ProjectionError, Result};
use crate::grid::Field;
use crate::io::csv_text;

/// Residual target of the root solve, relative to `Q`.
pub const PROJECTION_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-14;
const MAX_DOUBLINGS: usize = 200;
const MAX_ROOT_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub t_star: f64,
    pub u_star: Field,
    /// Parts at the input field.
    pub parts: EnergyParts,
    /// `E(t* u)` from the parts.
    pub energy: f64,
    /// `g(t*)/Q`.
    pub relative_residual: f64,
    pub iterations: usize,
}

fn fiber_g(parts: &EnergyParts, t: f64, p: f64, q: f64) -> f64 {
    parts.q - t.powf(2.0 * p - 2.0) * parts.d + t.powf(q - 2.0) * parts.g
}

fn fiber_dg(parts: &EnergyParts, t: f64, p: f64, q: f64) -> f64 {
    -(2.0 * p - 2.0) * t.powf(2.0 * p - 3.0) * parts.d + (q - 2.0) * t.powf(q - 3.0) * parts.g
}

/// Unique positive root of `g` from the parts of `u`.
pub fn fiber_root(parts: &EnergyParts, p: f64, q: f64) -> std::result::Result<(f64, usize), ProjectionError> {
    let EnergyParts { q: qv, d, g, .. } = *parts;
    if !(qv.is_finite() && d.is_finite() && g.is_finite()) {
        return Err(ProjectionError::NonFinite { q: qv, d, g });
    }
    if qv == 0.0 && d == 0.0 {
        return Err(ProjectionError::ZeroField);
    }
    if !(d > 0.0) || !(qv > 0.0) {
        return Err(ProjectionError::DegenerateNonlocal(d));
    }
    let closed = (qv / d).powf(1.0 / (2.0 * p - 2.0));
    if g == 0.0 {
        return Ok((closed, 0));
    }
    let mut lo = 0.5 * closed;
    let mut hi = closed;
    let mut doublings = 0;
    while fiber_g(parts, hi, p, q) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(ProjectionError::NoBracket {
                t: hi,
                g: fiber_g(parts, hi, p, q),
            });
        }
    }
    if fiber_g(parts, lo, p, q) <= 0.0 {
        return Err(ProjectionError::NoBracket {
            t: lo,
            g: fiber_g(parts, lo, p, q),
        });
    }
    // Newton, falling back to bisection whenever the step leaves the bracket.
    let mut t = closed.clamp(lo, hi);
    for it in 1..=MAX_ROOT_ITERS {
        let gt = fiber_g(parts, t, p, q);
        if gt.abs() <= ROOT_TOL * qv {
            return Ok((t, it));
        }
        if gt > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let dg = fiber_dg(parts, t, p, q);
        let newton = t - gt / dg;
        t = if dg < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok((t, it));
        }
    }
    Ok((t, MAX_ROOT_ITERS))
}

/// `u* = t(u) u` on the manifold.
pub fn project_to_nehari(ctx: &EnergyContext, u: &Field) -> Result<Projection> {
    let parts = ctx.parts(u)?;
    project_with_parts(ctx, u, parts)
}

/// Projection reusing already computed parts of `u`.
pub fn project_with_parts(ctx: &EnergyContext, u: &Field, parts: EnergyParts) -> Result<Projection> {
    let (p, q) = (ctx.params().p, ctx.params().q);
    let (t, iterations) = fiber_root(&parts, p, q)?;
    let rel = fiber_g(&parts, t, p, q) / parts.q;
    if !(rel.abs() <= PROJECTION_TOL) {
        return Err(CoreError::Projection(ProjectionError::NoBracket {
            t,
            g: rel * parts.q,
        }));
    }
    Ok(Projection {
        t_star: t,
        u_star: u.scaled(t),
        parts,
        energy: parts.energy_along_fiber(t, p, q),
        relative_residual: rel,
        iterations,
    })
}

/// Samples of `E(t u)` along one fiber.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberScan {
    pub t_values: Vec<f64>,
    pub e_values: Vec<f64>,
    /// `E'(tu)(tu)` at each sample.
    pub residuals: Vec<f64>,
    pub t_star: f64,
    pub residual_at_t_star: f64,
    pub e_at_t_star: f64,
}

impl FiberScan {
    pub fn argmax(&self) -> usize {
        self.e_values
            .iter()
            .enumerate()
            .fold(0, |best, (i, &e)| if e > self.e_values[best] { i } else { best })
    }

    /// The best sample lies in a grid cell adjacent to `t*`.
    pub fn max_brackets_t_star(&self) -> bool {
        let i = self.argmax();
        let lo = if i == 0 { 0.0 } else { self.t_values[i - 1] };
        let hi = self.t_values.get(i + 1).copied().unwrap_or(f64::INFINITY);
        lo <= self.t_star && self.t_star <= hi
    }

    /// Intervals entirely below `t*` with non-positive slope, and entirely
    /// above with non-negative slope.
    pub fn sign_violations(&self) -> usize {
        self.t_values
            .windows(2)
            .zip(self.e_values.windows(2))
            .filter(|(t, e)| {
                let slope = e[1] - e[0];
                (t[1] <= self.t_star && slope <= 0.0) || (t[0] >= self.t_star && slope >= 0.0)
            })
            .count()
    }

    /// Number of sign changes of the discrete slope.
    pub fn slope_sign_changes(&self) -> usize {
        let slopes: Vec<f64> = self.e_values.windows(2).map(|e| e[1] - e[0]).collect();
        slopes.windows(2).filter(|s| (s[0] > 0.0) != (s[1] > 0.0)).count()
    }

    pub fn to_csv(&self) -> String {
        csv_text(
            &["t", "energy", "residual"],
            (0..self.t_values.len()).map(|i| vec![self.t_values[i], self.e_values[i], self.residuals[i]]),
        )
    }
}

pub fn fiber_scan(ctx: &EnergyContext, u: &Field, t_grid: &[f64]) -> Result<FiberScan> {
    let parts = ctx.parts(u)?;
    let (p, q) = (ctx.params().p, ctx.params().q);
    let (t_star, _) = fiber_root(&parts, p, q)?;
    let resid = |t: f64| t * t * fiber_g(&parts, t, p, q);
    Ok(FiberScan {
        t_values: t_grid.to_vec(),
        e_values: t_grid.iter().map(|&t| parts.energy_along_fiber(t, p, q)).collect(),
        residuals: t_grid.iter().map(|&t| resid(t)).collect(),
        t_star,
        residual_at_t_star: resid(t_star),
        e_at_t_star: parts.energy_along_fiber(t_star, p, q),
    })
}

/// `count` points geometrically spaced over `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let r = (hi / lo).ln() / (count.max(2) - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundLevel {
    pub c_est: f64,
    pub argmin: Field,
    pub index: usize,
    /// Projected energy of every candidate, `None` where projection failed.
    pub energies: Vec<Option<f64>>,
}

/// Minimum of the projected energy over the candidates.
pub fn ground_level(ctx: &EnergyContext, candidates: &[Field]) -> Result<GroundLevel> {
    if candidates.is_empty() {
        return Err(CoreError::InvalidParameter("no candidates".into()));
    }
    let projected: Vec<Option<Projection>> = candidates
        .par_iter()
        .map(|u| project_to_nehari(ctx, u).ok())
        .collect();
    let energies: Vec<Option<f64>> = projected.iter().map(|p| p.as_ref().map(|p| p.energy)).collect();
    let (index, best) = projected
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p)))
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
        .ok_or(CoreError::Projection(ProjectionError::DegenerateNonlocal(0.0)))?;
    Ok(GroundLevel {
        c_est: best.energy,
        argmin: best.u_star,
        index,
        energies,
    })
}

/// One condition certified over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Smallest relative margin seen (negative means violated).
    pub worst_margin: f64,
}

impl ConditionCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, ok: bool) {
        self.samples += 1;
        if !ok {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    pub fn passed(&self) -> bool {
        self.samples > 0 && self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JReport {
    /// Sphere radius `r = (1/(4C))^{1/(2p−2)}`.
    pub radius: f64,
    pub bound: DBound,
    /// Samples with `D ≤ C Q^p`.
    pub bound_respected: ConditionCheck,
    pub j1: ConditionCheck,
    pub j2: ConditionCheck,
    pub j3: ConditionCheck,
    pub j4: ConditionCheck,
}

impl JReport {
    pub fn all_passed(&self) -> bool {
        self.bound_respected.passed() && self.j1.passed() && self.j2.passed() && self.j3.passed() && self.j4.passed()
    }

    pub fn checks(&self) -> [&ConditionCheck; 5] {
        [&self.bound_respected, &self.j1, &self.j2, &self.j3, &self.j4]
    }
}

/// Times at which `I(tu)/t^q` is sampled.
pub const J2_TIMES: [f64; 3] = [10.0, 100.0, 1000.0];

/// Certify the four structural conditions on the sample fields.
///
/// * bound: `D(u) ≤ C Q(u)^p` with the recorded `C`;
/// * (J1): `E ≥ r²/4` on the sphere `‖u‖ = r`;
/// * (J2): `I(tu)/t^q = t^{2p−q} D/(2p) − G/q` increases over [`J2_TIMES`];
/// * (J3): `E(tu)` increases before `t(u)` and decreases after;
/// * (J4): `E(u*) ≥ (1/2 − 1/q) Q(u*)` on the projections.
pub fn check_j_conditions(ctx: &EnergyContext, samples: &[Field], bound: DBound) -> Result<JReport> {
    let (p, q) = (ctx.params().p, ctx.params().q);
    let radius = (1.0 / (4.0 * bound.constant)).powf(1.0 / (2.0 * p - 2.0));
    let mut b = ConditionCheck::new("D bound");
    let mut j1 = ConditionCheck::new("(J1)");
    let mut j2 = ConditionCheck::new("(J2)");
    let mut j3 = ConditionCheck::new("(J3)");
    let mut j4 = ConditionCheck::new("(J4)");

    for u in samples {
        let parts = ctx.parts(u)?;
        let ratio = parts.d / parts.q.powf(p);
        b.record((bound.constant - ratio) / bound.constant, ratio <= bound.constant);

        let s = radius / parts.q.sqrt();
        let e_sphere = parts.energy_along_fiber(s, p, q);
        let floor = radius * radius / 4.0;
        j1.record((e_sphere - floor) / floor, e_sphere >= floor);

        let growth: Vec<f64> = J2_TIMES
            .iter()
            .map(|&t| t.powf(2.0 * p - q) * parts.d / (2.0 * p) - parts.g / q)
            .collect();
        let increasing = growth.windows(2).all(|w| w[1] > w[0]) && growth[growth.len() - 1] > 0.0;
        let margin = (growth[2] - growth[1]) / growth[2].abs().max(f64::MIN_POSITIVE);
        j2.record(margin, increasing);

        let proj = project_with_parts(ctx, u, parts)?;
        let t_grid = geometric_grid(0.05 * proj.t_star, 5.0 * proj.t_star, 201);
        let scan = fiber_scan(ctx, u, &t_grid)?;
        let viol = scan.sign_violations();
        j3.record(if viol == 0 { 0.0 } else { -(viol as f64) }, viol == 0 && scan.max_brackets_t_star());

        let qs = proj.t_star * proj.t_star * parts.q;
        let lower = (0.5 - 1.0 / q) * qs;
        let slack = 1e-12 * qs;
        j4.record((proj.energy - lower) / qs, proj.energy >= lower - slack);
    }
    Ok(JReport {
        radius,
        bound,
        bound_respected: b,
        j1,
        j2,
        j3,
        j4,
    })
}
