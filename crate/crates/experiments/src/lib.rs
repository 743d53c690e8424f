//! Experiment drivers for Choquard ground states: configuration, the
//! verification suites, solves and sweeps, and report emission.

// `!(x <= tol)` is written on purpose: a NaN must fail the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod drivers;
pub mod error;
pub mod report;
pub mod verify;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, Kind};
pub use error::{ExpError, Result};
pub use report::{Artifacts, Check, Report};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "CHOQUARD_GS_THREADS";

/// Worker count: the environment override, then the configured value.
pub fn worker_count(cfg: &ExperimentConfig) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ExpError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(cfg.experiment.workers),
    }
}

fn dispatch(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Report> {
    match cfg.kind {
        Kind::Solve => drivers::run_solve(cfg, art),
        Kind::Verify => verify::run_verify(cfg, art),
        Kind::GammaSweep => drivers::run_gamma_sweep(cfg, art),
        Kind::VlSign => drivers::run_vl_sign(cfg, art),
        Kind::BoxSweep => drivers::run_box_sweep(cfg, art),
        Kind::FiberScan => drivers::run_fiber_scan(cfg, art),
    }
}

/// Run the configured experiment on its own worker pool and write the
/// report into `out` when given. Configuration problems are returned as
/// errors; a failed solve becomes a report with a failing check.
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(cfg)? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| ExpError::Config(format!("cannot start worker pool: {e}")))?;
    let art = Artifacts::new(out);
    let mut report = match pool.install(|| dispatch(cfg, &art)) {
        Ok(r) => r,
        Err(e) if e.exit_code() == 2 => return Err(e),
        Err(e) => {
            let mut r = Report::new(cfg);
            r.check("run completed", false, e.to_string());
            r
        }
    };
    report.elapsed_secs = start.elapsed().as_secs_f64();
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}
