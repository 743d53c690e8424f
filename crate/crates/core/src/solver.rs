//! Projected gradient descent on the Nehari manifold.
//!
//! Each step is `u ← P(u − τ M⁻¹ ∇E(u))`, where `P` is the Nehari projection
//! and `M` the spectral preconditioner `√(|ξ|²+m²) + inf V`. The step length
//! is chosen by backtracking on the projected energy. Every
//! `recenter_every` iterations the iterate is translated by the integer
//! vector that brings its peak to the origin cell.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{EnergyContext, EnergyReport, GradNorm};
use crate::error::{CoreError, Result};
use crate::grid::{apply_multiplier, l2_inner, l2_norm2, periodic_center, shift, Field};
use crate::nehari::{project_to_nehari, Projection};
use crate::random::{random_initial, InitialFamily};

/// Stopping threshold on the gradient norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tolerance {
    /// Fraction of the gradient norm at the projected initial guess.
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRule {
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    pub initial: f64,
    pub max: f64,
    pub min: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            initial: 1.0,
            max: 4.0,
            min: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: Tolerance,
    pub grad_norm: GradNorm,
    pub step_rule: StepRule,
    /// Iterations between integer recenterings; 0 disables.
    pub recenter_every: usize,
    pub preconditioned: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: Tolerance::Relative(1e-8),
            grad_norm: GradNorm::L2,
            step_rule: StepRule::default(),
            recenter_every: 25,
            preconditioned: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIters,
    ProjectionFailed,
    /// Backtracking reached the minimum step without an acceptable point.
    Stalled,
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    /// `|E'(u)(u)| / Q(u)` after projection.
    pub nehari_residual: f64,
    pub t_star: f64,
    pub step: f64,
    pub shift: Option<Vec<i64>>,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub u_final: Field,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub shifts_applied: Vec<(usize, Vec<i64>)>,
    pub status: SolverStatus,
    pub records: Vec<IterRecord>,
    pub iterations: usize,
    /// Absolute gradient threshold used.
    pub grad_tol_abs: f64,
    pub report: EnergyReport,
    pub error: Option<CoreError>,
}

impl SolverResult {
    pub fn final_energy(&self) -> f64 {
        *self.energy_trace.last().unwrap_or(&f64::NAN)
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_trace.last().unwrap_or(&f64::NAN)
    }

    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }

    /// Centre of mass of `|u|²` per accepted iterate.
    pub fn center_trace(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.center.clone()).collect()
    }

    /// Largest step-to-step energy increase.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy_trace.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

struct Iterate {
    u: Field,
    energy: f64,
    grad: Field,
    grad_norm: f64,
    t_star: f64,
    nehari: f64,
}

fn evaluate(ctx: &EnergyContext, proj: Projection, norm: GradNorm) -> Result<Iterate> {
    let grad = ctx.grad_energy(&proj.u_star)?;
    let grad_norm = ctx.grad_norm(&grad, norm)?;
    Ok(Iterate {
        energy: proj.energy,
        grad,
        grad_norm,
        t_star: proj.t_star,
        nehari: proj.relative_residual.abs(),
        u: proj.u_star,
    })
}

/// Integer vector moving the peak of `|u|` to the origin cell.
pub fn recentering_shift(u: &Field) -> Vec<i64> {
    let g = u.grid();
    let x = g.coords(u.argmax_abs());
    x[..g.dim()].iter().map(|xi| -(xi.round() as i64)).collect()
}

fn precondition(ctx: &EnergyContext, g: &Field, on: bool) -> Field {
    if !on {
        return g.clone();
    }
    let mult = ctx.sqrt_op().multiplier();
    let offset = ctx.v_infimum();
    apply_multiplier(g, |k| 1.0 / (mult[k] + offset))
}

fn record(it: usize, cur: &Iterate, step: f64, shift: Option<Vec<i64>>) -> IterRecord {
    IterRecord {
        iter: it,
        energy: cur.energy,
        residual: cur.grad_norm,
        nehari_residual: cur.nehari,
        t_star: cur.t_star,
        step,
        shift,
        center: periodic_center(&cur.u),
    }
}

/// Run the descent from `init`.
pub fn solve(ctx: &EnergyContext, init: &Field, cfg: &SolverConfig) -> SolverResult {
    let norm = cfg.grad_norm;
    let empty = |err: CoreError| SolverResult {
        u_final: init.clone(),
        energy_trace: Vec::new(),
        residual_trace: Vec::new(),
        shifts_applied: Vec::new(),
        status: SolverStatus::ProjectionFailed,
        records: Vec::new(),
        iterations: 0,
        grad_tol_abs: f64::NAN,
        report: EnergyReport {
            q_val: f64::NAN,
            d_val: f64::NAN,
            gamma_term: f64::NAN,
            e_val: f64::NAN,
            e_per_val: f64::NAN,
            nehari_residual: f64::NAN,
            grad_norm: f64::NAN,
        },
        error: Some(err),
    };
    let mut cur = match project_to_nehari(ctx, init).and_then(|p| evaluate(ctx, p, norm)) {
        Ok(c) => c,
        Err(e) => return empty(e),
    };
    let tol = match cfg.grad_tol {
        Tolerance::Relative(r) => r * cur.grad_norm,
        Tolerance::Absolute(a) => a,
    };
    let slack = |e: f64| 1e-13 * e.abs().max(1.0);
    let symmetric = !ctx.potential().has_localized();

    let mut records = vec![record(0, &cur, 0.0, None)];
    let mut shifts = Vec::new();
    let mut status = SolverStatus::MaxIters;
    let mut error = None;
    let mut tau = cfg.step_rule.initial;
    let mut it = 0;

    while it < cfg.max_iters {
        if cur.grad_norm <= tol {
            status = SolverStatus::Converged;
            break;
        }
        it += 1;
        let dir = precondition(ctx, &cur.grad, cfg.preconditioned);
        let slope = l2_inner(&cur.grad, &dir).unwrap_or(0.0);
        let mut accepted = None;
        let mut failure = None;
        tau = (2.0 * tau).min(cfg.step_rule.max);
        while tau >= cfg.step_rule.min {
            let trial_u = cur.u.axpy(-tau, &dir).expect("same grid");
            match project_to_nehari(ctx, &trial_u).and_then(|p| evaluate(ctx, p, norm)) {
                Ok(trial) => {
                    // Once the predicted decrease drops below the rounding
                    // level of E, energy comparisons are noise; require the
                    // gradient to shrink instead.
                    let predicted = cfg.step_rule.sufficient_decrease * tau * slope;
                    let ok = if predicted > slack(cur.energy) {
                        trial.energy <= cur.energy - predicted
                    } else {
                        trial.energy <= cur.energy + slack(cur.energy) && trial.grad_norm < cur.grad_norm
                    };
                    if trial.energy.is_finite() && ok {
                        accepted = Some(trial);
                        break;
                    }
                }
                Err(e) => failure = Some(e),
            }
            tau *= cfg.step_rule.shrink;
        }
        let Some(next) = accepted else {
            match failure {
                Some(e) => {
                    status = SolverStatus::ProjectionFailed;
                    error = Some(e);
                }
                None => status = SolverStatus::Stalled,
            }
            break;
        };
        cur = next;

        let mut applied = None;
        if cfg.recenter_every > 0 && it % cfg.recenter_every == 0 {
            let z = recentering_shift(&cur.u);
            if z.iter().any(|&zi| zi != 0) {
                let moved = shift(&cur.u, &z)
                    .and_then(|u| project_to_nehari(ctx, &u))
                    .and_then(|p| evaluate(ctx, p, norm));
                if let Ok(moved) = moved {
                    if symmetric || moved.energy < cur.energy {
                        cur = moved;
                        shifts.push((it, z.clone()));
                        applied = Some(z);
                    }
                }
            }
        }
        records.push(record(it, &cur, tau, applied));
    }
    if status == SolverStatus::MaxIters && cur.grad_norm <= tol {
        status = SolverStatus::Converged;
    }

    let report = ctx.energy_with(&cur.u, norm).unwrap_or(EnergyReport {
        q_val: f64::NAN,
        d_val: f64::NAN,
        gamma_term: f64::NAN,
        e_val: cur.energy,
        e_per_val: f64::NAN,
        nehari_residual: f64::NAN,
        grad_norm: cur.grad_norm,
    });
    SolverResult {
        u_final: cur.u,
        energy_trace: records.iter().map(|r| r.energy).collect(),
        residual_trace: records.iter().map(|r| r.residual).collect(),
        shifts_applied: shifts,
        status,
        records,
        iterations: it,
        grad_tol_abs: tol,
        report,
        error,
    }
}

/// Seeded initial guess number `index` of a multistart batch.
pub fn multistart_initial(ctx: &EnergyContext, family: &InitialFamily, seed: u64, index: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    random_initial(ctx.grid(), family, &mut rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multistart {
    pub best: usize,
    pub runs: Vec<SolverResult>,
}

impl Multistart {
    pub fn best(&self) -> &SolverResult {
        &self.runs[self.best]
    }

    /// Largest gap between the best energy and any other converged run.
    pub fn energy_spread(&self) -> f64 {
        let best = self.best().final_energy();
        self.runs
            .iter()
            .filter(|r| r.converged())
            .map(|r| (r.final_energy() - best).abs())
            .fold(0.0, f64::max)
    }
}

/// `k` independent runs from seeds `cfg.seed + i`, concurrently.
pub fn multistart(ctx: &EnergyContext, k: usize, cfg: &SolverConfig, family: &InitialFamily) -> Result<Multistart> {
    if k == 0 {
        return Err(CoreError::InvalidParameter("multistart needs k >= 1".into()));
    }
    let runs: Vec<SolverResult> = (0..k)
        .into_par_iter()
        .map(|i| solve(ctx, &multistart_initial(ctx, family, cfg.seed, i), cfg))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.converged())
        .min_by(|a, b| a.1.final_energy().total_cmp(&b.1.final_energy()))
        .map(|(i, _)| i)
        .ok_or_else(|| CoreError::InvalidParameter(format!("none of the {k} runs converged")))?;
    Ok(Multistart { best, runs })
}

/// Iterations of monotone outward drift required to flag escape.
pub const ESCAPE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    /// Distance of the centre of mass from the origin, per iterate.
    pub drift: Vec<f64>,
    /// Longest run of strictly increasing drift.
    pub longest_outward_run: usize,
    /// Fraction of `∫u²` within `L/4` of the origin in the final frame.
    pub mass_near_origin: f64,
    pub escaping: bool,
}

fn center_norm(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Flag escape when the centre of mass moves outward on more than
/// [`ESCAPE_RUN`] consecutive iterations and covers at least one cell.
pub fn escape_from_trace(centers: &[Vec<f64>], final_field: &Field) -> EscapeReport {
    let drift: Vec<f64> = centers.iter().map(|c| center_norm(c)).collect();
    let h = final_field.grid().spacing();
    let mut longest = 0;
    let mut escaping = false;
    let mut start = 0;
    for i in 1..=drift.len() {
        if i == drift.len() || drift[i] <= drift[i - 1] {
            let run = i - 1 - start;
            longest = longest.max(run);
            if run > ESCAPE_RUN && drift[i - 1] - drift[start] >= h {
                escaping = true;
            }
            start = i;
        }
    }
    let g = final_field.grid();
    let radius = g.half_period() / 4.0;
    let origin = vec![0.0; g.dim()];
    let total = l2_norm2(final_field);
    let near: f64 = final_field
        .values()
        .iter()
        .enumerate()
        .filter(|(j, _)| crate::grid::torus_distance(g, &g.coords(*j)[..g.dim()], &origin) < radius)
        .map(|(_, v)| v * v)
        .sum::<f64>()
        * g.cell_volume();
    EscapeReport {
        drift,
        longest_outward_run: longest,
        mass_near_origin: if total > 0.0 { near / total } else { 0.0 },
        escaping,
    }
}

pub fn escape_diagnostic(result: &SolverResult) -> EscapeReport {
    escape_from_trace(&result.center_trace(), &result.u_final)
}
