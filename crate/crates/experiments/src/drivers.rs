//! Solve, fiber-scan and the three sweeps.

use choquard_core::energy::EnergyContext;
use choquard_core::grid::{embed, l2_norm2, periodic_center, reflect_about, shift, torus_distance};
use choquard_core::nehari::{fiber_scan, geometric_grid, project_to_nehari};
use choquard_core::problem::{LocalizedProfile, ProblemParams, SignMode};
use choquard_core::random::{gaussian, InitialFamily};
use choquard_core::solver::{escape_diagnostic, multistart_initial, solve, SolverConfig, SolverResult};
use choquard_core::{Field, Grid, PotentialSpec};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{ExpError, Result};
use crate::report::{sci, Artifacts, Report, TextTable};
use crate::verify::build_context;

/// Allowed energy rise per accepted step, relative to `max(1, |E|)`.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Allowed asymmetry `‖u − u(2c − ·)‖ / ‖u‖` of a ground state about its
/// centre of mass.
pub const EVENNESS_TOL: f64 = 1e-6;
/// Slack of the energy sandwich, relative to `max(1, c₀)`.
pub const SANDWICH_SLACK: f64 = 1e-9;

/// Unit Gaussian at the origin.
pub fn symmetric_initial(grid: &Grid) -> Field {
    gaussian(grid, &vec![0.0; grid.dim()], 1.0, 1.0)
}

/// Same spacing, half-period `l`.
pub fn with_box(params: &ProblemParams, l: f64) -> ProblemParams {
    let h = 2.0 * params.half_period / params.points as f64;
    ProblemParams {
        half_period: l,
        points: (2.0 * l / h).round() as usize,
        ..*params
    }
}

fn status(r: &SolverResult) -> String {
    format!("{:?}", r.status)
}

fn solve_label(r: &SolverResult) -> String {
    format!(
        "{} after {} iterations, residual {} <= {}",
        status(r),
        r.iterations,
        sci(r.final_residual()),
        sci(r.grad_tol_abs)
    )
}

fn ok_solve(r: &SolverResult, what: &str) -> Result<()> {
    if r.converged() {
        Ok(())
    } else {
        Err(ExpError::Core(choquard_core::CoreError::InvalidParameter(format!(
            "{what} did not converge: {}{}",
            solve_label(r),
            r.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
        ))))
    }
}

/// `∫_{|y−c|<r} u²` on the torus.
pub fn ball_mass(u: &Field, center: &[f64], radius: f64) -> f64 {
    let g = u.grid();
    u.values()
        .iter()
        .enumerate()
        .filter(|(j, _)| torus_distance(g, &g.coords(*j)[..g.dim()], center) < radius)
        .map(|(_, v)| v * v)
        .sum::<f64>()
        * g.cell_volume()
}

/// Fraction of `∫u²` farther than `radius` from the centre of mass.
pub fn tail_fraction(u: &Field, radius: f64) -> f64 {
    let total = l2_norm2(u);
    if total == 0.0 {
        return 0.0;
    }
    (total - ball_mass(u, &periodic_center(u), radius)).max(0.0) / total
}

/// `‖u − u(2c − ·)‖ / ‖u‖` about the centre of mass `c`.
pub fn evenness_defect(u: &Field) -> Result<f64> {
    let r = reflect_about(u, &periodic_center(u))?;
    Ok((l2_norm2(&u.sub(&r)?) / l2_norm2(u)).sqrt())
}

/// `min_z ‖u(· − z) − u₀‖_Q` over integer shifts near the offset of the
/// centres of mass.
pub fn recentered_distance(ctx: &EnergyContext, u: &Field, u0: &Field) -> Result<f64> {
    let c = periodic_center(u);
    let c0 = periodic_center(u0);
    let dim = ctx.grid().dim();
    let base: Vec<i64> = (0..dim).map(|a| (c0[a] - c[a]).round() as i64).collect();
    let mut best = f64::INFINITY;
    for k in 0..3usize.pow(dim as u32) {
        let z: Vec<i64> = (0..dim)
            .map(|a| base[a] + ((k / 3usize.pow(a as u32)) % 3) as i64 - 1)
            .collect();
        best = best.min(ctx.q_norm(&shift(u, &z)?.sub(u0)?)?);
    }
    Ok(best)
}

/// Sign `mode` with amplitude `a` on the configured bump shape.
pub fn bump(pot: &PotentialSpec, a: f64) -> LocalizedProfile {
    let sign = if a > 0.0 {
        SignMode::Positive
    } else if a < 0.0 {
        SignMode::Negative
    } else {
        return LocalizedProfile::zero();
    };
    LocalizedProfile {
        sign,
        shape: pot.vl.shape.with_amplitude(a),
        integrability: pot.vl.integrability,
    }
}

fn provenance(cfg: &ExperimentConfig, label: &str, r: &SolverResult) -> serde_json::Value {
    json!({
        "kind": cfg.kind.as_str(),
        "run": label,
        "config_hash": cfg.content_hash(),
        "energy": r.final_energy(),
        "residual": r.final_residual(),
        "status": status(r),
        "iterations": r.iterations,
    })
}

fn write_runs(cfg: &ExperimentConfig, art: &Artifacts, runs: &[(String, &SolverResult)]) -> Result<()> {
    art.traces(runs)?;
    for (label, r) in runs {
        art.field(label, &r.u_final, provenance(cfg, label, r))?;
    }
    Ok(())
}

/// Multistart ground-state solve.
pub fn run_solve(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Report> {
    let mut report = Report::new(cfg);
    let ctx = build_context(cfg)?;
    let scfg = cfg.solver_config();
    let k = cfg.experiment.multistarts;
    let family = InitialFamily::default();
    let runs: Vec<SolverResult> = (0..k)
        .into_par_iter()
        .map(|i| solve(&ctx, &multistart_initial(&ctx, &family, scfg.seed, i), &scfg))
        .collect();
    let converged: Vec<usize> = (0..k).filter(|&i| runs[i].converged()).collect();
    let best = converged
        .iter()
        .copied()
        .min_by(|&a, &b| runs[a].final_energy().total_cmp(&runs[b].final_energy()));

    let mut table = TextTable::new("Runs", &["run", "seed", "energy", "residual", "iterations", "status"]);
    let mut rows = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            (scfg.seed + i as u64).to_string(),
            sci(r.final_energy()),
            sci(r.final_residual()),
            r.iterations.to_string(),
            status(r),
        ]);
        rows.push(vec![
            i as f64,
            r.final_energy(),
            r.final_residual(),
            r.iterations as f64,
            r.report.nehari_residual,
            r.converged() as u8 as f64,
        ]);
    }
    report.tables.push(table);
    report.set_metrics(&["run", "energy", "residual", "iterations", "nehari_residual", "converged"], rows);

    let Some(b) = best else {
        report.check("best run converged", false, format!("none of {k} runs converged"));
        return Ok(report);
    };
    let r = &runs[b];
    let c = r.final_energy();
    report.check("best run converged", true, format!("run {b}: {}", solve_label(r)));
    report.check(
        "all runs converged",
        converged.len() == k,
        format!("{} of {k} runs converged", converged.len()),
    );
    report.check("ground level positive", c > 0.0, format!("c_est = {}", sci(c)));
    let spread = converged
        .iter()
        .map(|&i| (runs[i].final_energy() - c).abs())
        .fold(0.0, f64::max);
    report.check(
        "multistart agreement",
        spread <= cfg.experiment.agree_tol,
        format!("energy spread {} <= {:e}", sci(spread), cfg.experiment.agree_tol),
    );
    let rise = r.max_energy_increase();
    let allowed = MONOTONE_SLACK * c.abs().max(1.0);
    report.check(
        "energy monotone",
        rise <= allowed,
        format!("largest step increase {} <= {}", sci(rise), sci(allowed)),
    );
    if !cfg.potential().has_localized() {
        let d = evenness_defect(&r.u_final)?;
        report.check(
            "ground state even about its centre",
            d <= EVENNESS_TOL,
            format!("reflection defect {} <= {EVENNESS_TOL:e}", sci(d)),
        );
    }
    let esc = escape_diagnostic(r);
    report.note(format!(
        "escape diagnostic: longest outward drift run {}, mass within L/4 of origin {:.6}, escaping = {}",
        esc.longest_outward_run, esc.mass_near_origin, esc.escaping
    ));
    report.note(format!(
        "energy parts of the best run: Q = {}, D = {}, G = {}, E_per = {}",
        sci(r.report.q_val),
        sci(r.report.d_val),
        sci(r.report.gamma_term),
        sci(r.report.e_per_val)
    ));
    let labelled: Vec<(String, &SolverResult)> = runs.iter().enumerate().map(|(i, r)| (format!("run{i}"), r)).collect();
    art.traces(&labelled)?;
    art.field("ground_state", &r.u_final, provenance(cfg, "ground_state", r))?;
    Ok(report)
}

/// Fibering maps `t ↦ E(tu)` around the projection of random fields.
pub fn run_fiber_scan(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Report> {
    let mut report = Report::new(cfg);
    let ctx = build_context(cfg)?;
    let e = &cfg.experiment;
    let family = InitialFamily::default();
    let mut table = TextTable::new("Fibers", &["field", "t*", "E(t*u)", "argmax t", "sign violations", "slope changes"]);
    let mut rows = Vec::new();
    let (mut bad_sign, mut bad_shape, mut bad_bracket) = (0, 0, 0);
    for i in 0..e.multistarts {
        let u = multistart_initial(&ctx, &family, e.seed, i);
        let t_star = project_to_nehari(&ctx, &u)?.t_star;
        let grid = geometric_grid(e.fiber_lo * t_star, e.fiber_hi * t_star, e.fiber_points);
        let scan = fiber_scan(&ctx, &u, &grid)?;
        bad_sign += (scan.sign_violations() > 0) as usize;
        bad_shape += (scan.slope_sign_changes() != 1) as usize;
        bad_bracket += (!scan.max_brackets_t_star()) as usize;
        let am = scan.t_values[scan.argmax()];
        table.push(vec![
            i.to_string(),
            sci(scan.t_star),
            sci(scan.e_at_t_star),
            sci(am),
            scan.sign_violations().to_string(),
            scan.slope_sign_changes().to_string(),
        ]);
        rows.push(vec![
            i as f64,
            scan.t_star,
            scan.e_at_t_star,
            am,
            scan.sign_violations() as f64,
            scan.slope_sign_changes() as f64,
        ]);
        art.text(&format!("fiber{i}.csv"), &scan.to_csv())?;
    }
    let n = e.multistarts;
    report.tables.push(table);
    report.set_metrics(&["field", "t_star", "energy_at_t_star", "argmax_t", "sign_violations", "slope_changes"], rows);
    report.check("fiber sign pattern", bad_sign == 0, format!("{bad_sign} of {n} fibers violate the sign pattern"));
    report.check("single interior maximum", bad_shape == 0, format!("{bad_shape} of {n} fibers change slope sign more than once"));
    report.check("maximum brackets t*", bad_bracket == 0, format!("{bad_bracket} of {n} sampled maxima miss t*"));
    Ok(report)
}

/// Continuation over decreasing defocusing amplitudes toward the
/// `Γ = 0` ground state.
pub fn run_gamma_sweep(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Report> {
    let mut report = Report::new(cfg);
    let params = *cfg.params();
    let pot = cfg.potential();
    let scfg = cfg.solver_config();
    let q = params.q;
    let ctx0 = EnergyContext::new(params, pot.with_gamma_scaled(0.0))?;
    let init = symmetric_initial(ctx0.grid());
    let base = solve(&ctx0, &init, &scfg);
    ok_solve(&base, "baseline (eps = 0)")?;
    let u0 = base.u_final.clone();
    let c0 = base.final_energy();

    struct Point {
        eps: f64,
        result: SolverResult,
        s: f64,
        upper: f64,
        distance: f64,
    }
    let eps = cfg.experiment.eps.clone();
    let points: Vec<Result<Point>> = eps
        .par_iter()
        .map(|&eps| {
            let ctx = EnergyContext::new(params, pot.with_gamma_scaled(eps))?;
            let result = if eps == 0.0 {
                solve(&ctx, &init, &scfg)
            } else {
                solve(&ctx, &u0, &scfg)
            };
            ok_solve(&result, &format!("eps = {eps}"))?;
            let s = project_to_nehari(&ctx, &u0)?.t_star;
            let upper = c0 + s.powf(q) / q * ctx.gamma_term(&u0)?;
            let distance = recentered_distance(&ctx0, &result.u_final, &u0)?;
            Ok(Point {
                eps,
                result,
                s,
                upper,
                distance,
            })
        })
        .collect();
    let points: Vec<Point> = points.into_iter().collect::<Result<_>>()?;

    let slack = SANDWICH_SLACK * c0.abs().max(1.0);
    let mut table = TextTable::new(
        "Sweep",
        &["eps", "c_eps", "lower c0", "upper", "s", "distance", "iterations"],
    );
    let mut rows = Vec::new();
    let mut sandwich_ok = true;
    for p in &points {
        let c = p.result.final_energy();
        sandwich_ok &= c0 - slack <= c && c <= p.upper + slack;
        table.push(vec![
            format!("{}", p.eps),
            sci(c),
            sci(c0),
            sci(p.upper),
            sci(p.s),
            sci(p.distance),
            p.result.iterations.to_string(),
        ]);
        rows.push(vec![p.eps, c, c0, p.upper, p.s, p.distance, p.result.iterations as f64]);
    }
    report.tables.push(table);
    report.set_metrics(&["eps", "c", "c0", "upper", "s", "distance", "iterations"], rows);
    report.check(
        "baseline converged",
        true,
        format!("c0 = {} ({})", sci(c0), solve_label(&base)),
    );
    report.check(
        "sandwich bounds",
        sandwich_ok,
        format!("c0 <= c_eps <= c0 + s^q/q int eps Gamma |u0|^q with slack {}", sci(slack)),
    );
    let cs: Vec<f64> = points.iter().map(|p| p.result.final_energy()).collect();
    report.check(
        "monotone approach to c0",
        cs.windows(2).all(|w| w[1] <= w[0] + slack),
        format!("c_eps non-increasing as eps decreases: [{}]", cs.iter().map(|c| format!("{c:.10}")).collect::<Vec<_>>().join(", ")),
    );
    let ds: Vec<f64> = points.iter().map(|p| p.distance).collect();
    report.check(
        "recentered distance decreasing",
        ds.windows(2).all(|w| w[1] < w[0]),
        format!("[{}]", ds.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")),
    );
    if let Some(p) = points.iter().find(|p| p.eps == 0.0) {
        report.check(
            "eps = 0 reproduces the baseline",
            p.result.u_final == base.u_final && p.result.final_energy() == c0,
            "bit-identical final field and energy",
        );
    }
    report.note("the defocusing coefficient is eps times a fixed base profile, one admissible sequence tending to 0");
    let mut runs: Vec<(String, &SolverResult)> = vec![("baseline".into(), &base)];
    runs.extend(points.iter().map(|p| (format!("eps{}", p.eps), &p.result)));
    write_runs(cfg, art, &runs)?;
    Ok(report)
}

/// One box of the localized-bump sweep.
pub struct BumpPoint {
    pub half_period: f64,
    pub periodic: SolverResult,
    pub bumped: SolverResult,
    pub gap: f64,
    pub overlap: f64,
}

/// Periodic, `a = 0` and negative-bump levels on the configured box. The
/// negative case continues from the periodic minimizer.
pub struct SignedLevels {
    pub periodic: SolverResult,
    pub zero: SolverResult,
    pub negative: SolverResult,
}

pub fn signed_levels(params: &ProblemParams, pot: &PotentialSpec, amplitude: f64, scfg: &SolverConfig) -> Result<SignedLevels> {
    let ctx_per = EnergyContext::new(*params, pot.periodic_part())?;
    let ctx_zero = EnergyContext::new(*params, pot.with_localized(bump(pot, 0.0)))?;
    let ctx_neg = EnergyContext::new(*params, pot.with_localized(bump(pot, -amplitude)))?;
    let init = symmetric_initial(ctx_per.grid());
    let (periodic, zero) = rayon::join(|| solve(&ctx_per, &init, scfg), || solve(&ctx_zero, &init, scfg));
    ok_solve(&periodic, "periodic level")?;
    ok_solve(&zero, "a = 0 level")?;
    let negative = solve(&ctx_neg, &periodic.u_final, scfg);
    ok_solve(&negative, "negative bump")?;
    Ok(SignedLevels { periodic, zero, negative })
}

/// For each `L`: the periodic level from a centred Gaussian, then the level
/// with the positive bump started from the periodic minimizer moved to the
/// antipode of the bump.
pub fn positive_bump_sweep(
    params: &ProblemParams,
    pot: &PotentialSpec,
    amplitude: f64,
    lengths: &[f64],
    radius: f64,
    scfg: &SolverConfig,
) -> Result<Vec<BumpPoint>> {
    let center: Vec<f64> = pot.vl.shape.center().map(|c| c.to_vec()).unwrap_or_default();
    lengths
        .par_iter()
        .map(|&l| {
            let p = with_box(params, l);
            let ctx_per = EnergyContext::new(p, pot.periodic_part())?;
            let ctx_pos = EnergyContext::new(p, pot.with_localized(bump(pot, amplitude)))?;
            let periodic = solve(&ctx_per, &symmetric_initial(ctx_per.grid()), scfg);
            ok_solve(&periodic, &format!("periodic level at L = {l}"))?;
            let z: Vec<i64> = center.iter().map(|c| c.round() as i64 + l as i64).collect();
            let far = shift(&periodic.u_final, &z)?;
            let bumped = solve(&ctx_pos, &far, scfg);
            ok_solve(&bumped, &format!("positive bump at L = {l}"))?;
            let gap = bumped.final_energy() - periodic.final_energy();
            let overlap = ball_mass(&bumped.u_final, &center, radius);
            Ok(BumpPoint {
                half_period: l,
                periodic,
                bumped,
                gap,
                overlap,
            })
        })
        .collect()
}

/// Levels with a negative, vanishing and positive localized potential.
pub fn run_vl_sign(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Report> {
    let mut report = Report::new(cfg);
    let params = *cfg.params();
    let pot = cfg.potential();
    let scfg = cfg.solver_config();
    let a = cfg.experiment.amplitude;
    let sweep = || {
        positive_bump_sweep(
            &params,
            pot,
            a,
            &cfg.experiment.lengths,
            cfg.experiment.overlap_radius,
            &scfg,
        )
    };
    let (levels, sweep) = rayon::join(|| signed_levels(&params, pot, a, &scfg), sweep);
    let SignedLevels { periodic: per, zero, negative: neg } = levels?;
    let sweep = sweep?;
    let c_per = per.final_energy();
    let c_neg = neg.final_energy();

    let tol = per.grad_tol_abs.max(neg.grad_tol_abs);
    report.check(
        "negative bump lowers the level",
        c_neg < c_per - 10.0 * tol,
        format!(
            "c(-{a}) = {} < c_per - 10 tol = {} (tol = {})",
            sci(c_neg),
            sci(c_per - 10.0 * tol),
            sci(tol)
        ),
    );
    report.check(
        "a = 0 equals the periodic level",
        zero.final_energy() == c_per,
        format!("c(0) = {}, c_per = {}", sci(zero.final_energy()), sci(c_per)),
    );

    let mut table = TextTable::new(
        "Positive bump",
        &["L", "n", "c_per(L)", "c(+a, L)", "gap", "overlap", "escaping", "mass near origin"],
    );
    let mut rows = Vec::new();
    for p in &sweep {
        let esc = escape_diagnostic(&p.bumped);
        table.push(vec![
            format!("{}", p.half_period),
            p.bumped.u_final.grid().points().to_string(),
            sci(p.periodic.final_energy()),
            sci(p.bumped.final_energy()),
            sci(p.gap),
            sci(p.overlap),
            esc.escaping.to_string(),
            format!("{:.3e}", esc.mass_near_origin),
        ]);
        rows.push(vec![
            p.half_period,
            p.periodic.final_energy(),
            p.bumped.final_energy(),
            p.gap,
            p.overlap,
            esc.mass_near_origin,
        ]);
    }
    report.tables.push(table);
    let mut levels = TextTable::new("Levels at the base box", &["case", "c_est", "iterations", "status"]);
    for (name, r) in [("a < 0", &neg), ("a = 0", &zero), ("periodic", &per)] {
        levels.push(vec![name.into(), sci(r.final_energy()), r.iterations.to_string(), status(r)]);
    }
    report.tables.insert(0, levels);
    report.set_metrics(&["L", "c_per", "c_pos", "gap", "overlap", "mass_near_origin"], rows);

    let gaps: Vec<f64> = sweep.iter().map(|p| p.gap).collect();
    let overlaps: Vec<f64> = sweep.iter().map(|p| p.overlap).collect();
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ");
    report.check(
        "positive bump gap positive",
        gaps.iter().all(|&g| g > 0.0),
        format!("c(+a, L) - c_per(L) = [{}]", list(&gaps)),
    );
    report.check(
        "positive bump gap decreasing",
        gaps.windows(2).all(|w| w[1] < w[0]),
        format!("strictly decreasing over L = {:?}", cfg.experiment.lengths),
    );
    report.check(
        "bump overlap decreasing",
        overlaps.windows(2).all(|w| w[1] < w[0]),
        format!("int_(|y - c| < {}) u^2 = [{}]", cfg.experiment.overlap_radius, list(&overlaps)),
    );
    report.note(
        "on a finite box a minimizer always exists; non-attainment shows as a gap to the periodic \
         level and a bump overlap that both shrink as L grows",
    );
    report.note("c_per is computed by the same solver on the same box with V_l removed");

    let mut runs: Vec<(String, &SolverResult)> =
        vec![("periodic".into(), &per), ("zero".into(), &zero), ("negative".into(), &neg)];
    for p in &sweep {
        runs.push((format!("periodic_L{}", p.half_period), &p.periodic));
        runs.push((format!("positive_L{}", p.half_period), &p.bumped));
    }
    write_runs(cfg, art, &runs)?;
    Ok(report)
}

/// Ground level against box size at fixed spacing, plus one halved spacing.
pub fn run_box_sweep(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Report> {
    let mut report = Report::new(cfg);
    let params = *cfg.params();
    let pot = cfg.potential().clone();
    let scfg = cfg.solver_config();
    let lengths = cfg.experiment.lengths.clone();

    let first = with_box(&params, lengths[0]);
    let ctx_first = EnergyContext::new(first, pot.clone())?;
    let r_first = solve(&ctx_first, &symmetric_initial(ctx_first.grid()), &scfg);
    ok_solve(&r_first, &format!("L = {}", lengths[0]))?;
    let u_first = r_first.u_final.clone();

    let rest: Vec<Result<SolverResult>> = lengths[1..]
        .par_iter()
        .map(|&l| {
            let ctx = EnergyContext::new(with_box(&params, l), pot.clone())?;
            let r = solve(&ctx, &embed(&u_first, ctx.grid())?, &scfg);
            ok_solve(&r, &format!("L = {l}"))?;
            Ok(r)
        })
        .collect();
    let mut results = vec![r_first];
    for r in rest {
        results.push(r?);
    }
    let cs: Vec<f64> = results.iter().map(|r| r.final_energy()).collect();
    let tails: Vec<f64> = results
        .iter()
        .zip(&lengths)
        .map(|(r, &l)| tail_fraction(&r.u_final, l / 2.0))
        .collect();

    let mut table = TextTable::new("Box sweep", &["L", "n", "c_est", "|c(L) - c(prev)|", "tail mass", "iterations"]);
    let mut rows = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let diff = if i == 0 { f64::NAN } else { (cs[i] - cs[i - 1]).abs() };
        table.push(vec![
            format!("{}", lengths[i]),
            r.u_final.grid().points().to_string(),
            sci(cs[i]),
            if i == 0 { "-".into() } else { sci(diff) },
            sci(tails[i]),
            r.iterations.to_string(),
        ]);
        rows.push(vec![lengths[i], r.u_final.grid().points() as f64, cs[i], diff, tails[i]]);
    }
    let diffs: Vec<f64> = cs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if diffs.len() >= 2 {
        report.check(
            "Cauchy differences decreasing",
            diffs.windows(2).all(|w| w[1] < w[0]),
            format!("|c(L_k+1) - c(L_k)| = [{}]", diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")),
        );
    } else {
        report.note("two lengths only; one Cauchy difference, no monotonicity check");
    }
    let tail = *tails.last().expect("nonempty");
    report.check(
        "tail mass at the largest box",
        tail < cfg.experiment.tail_tol,
        format!(
            "fraction of int u^2 outside |y - c| < L/2 at L = {}: {} < {:e}",
            lengths[lengths.len() - 1],
            sci(tail),
            cfg.experiment.tail_tol
        ),
    );

    let mut extra = None;
    if cfg.experiment.resolution_study {
        let fine = ProblemParams {
            points: 2 * first.points,
            ..first
        };
        let ctx = EnergyContext::new(fine, pot.clone())?;
        let r = solve(&ctx, &symmetric_initial(ctx.grid()), &scfg);
        ok_solve(&r, "halved spacing")?;
        let shift_h = (r.final_energy() - cs[0]).abs();
        let gap_l = diffs[0];
        report.check(
            "resolution shift below truncation gap",
            shift_h < gap_l,
            format!(
                "L = {}: |c(h/2) - c(h)| = {} vs |c({}) - c({})| = {}",
                lengths[0],
                sci(shift_h),
                lengths[1],
                lengths[0],
                sci(gap_l)
            ),
        );
        table.push(vec![
            format!("{} (h/2)", lengths[0]),
            fine.points.to_string(),
            sci(r.final_energy()),
            sci(shift_h),
            sci(tail_fraction(&r.u_final, lengths[0] / 2.0)),
            r.iterations.to_string(),
        ]);
        rows.push(vec![lengths[0], fine.points as f64, r.final_energy(), shift_h, f64::NAN]);
        extra = Some(r);
    }
    report.tables.push(table);
    report.set_metrics(&["L", "n", "c", "diff", "tail"], rows);

    let mut runs: Vec<(String, &SolverResult)> = results
        .iter()
        .zip(&lengths)
        .map(|(r, l)| (format!("L{l}"), r))
        .collect();
    if let Some(r) = &extra {
        runs.push((format!("L{}_fine", lengths[0]), r));
    }
    write_runs(cfg, art, &runs)?;
    Ok(report)
}
