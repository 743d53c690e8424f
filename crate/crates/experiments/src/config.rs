//! Experiment configuration: a problem description plus `[solver]` and
//! `[experiment]` sections.
//!
//! The problem is either inline (`[params]`, `[potential.*]`) or referenced
//! by a top-level `problem = "path.toml"`, resolved relative to the
//! experiment file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use choquard_core::config::{parse_problem, problem_table, ProblemConfig};
use choquard_core::energy::GradNorm;
use choquard_core::problem::{validate, ProblemParams, ValidationReport};
use choquard_core::solver::{SolverConfig, StepRule, Tolerance};
use choquard_core::PotentialSpec;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{ExpError, Result};
use crate::report::blob_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Solve,
    Verify,
    GammaSweep,
    VlSign,
    BoxSweep,
    FiberScan,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Solve,
        Kind::Verify,
        Kind::GammaSweep,
        Kind::VlSign,
        Kind::BoxSweep,
        Kind::FiberScan,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Verify => "verify",
            Kind::GammaSweep => "gamma-sweep",
            Kind::VlSign => "vl-sign",
            Kind::BoxSweep => "box-sweep",
            Kind::FiberScan => "fiber-scan",
        }
    }
}

impl FromStr for Kind {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ExpError::Config(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceMode {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    Dual,
}

/// `[solver]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub tolerance: ToleranceMode,
    pub grad_norm: NormKind,
    pub recenter_every: usize,
    pub preconditioned: bool,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub step_initial: f64,
    pub step_max: f64,
    pub step_min: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_iters: d.max_iters,
            grad_tol: 1e-8,
            tolerance: ToleranceMode::Relative,
            grad_norm: NormKind::L2,
            recenter_every: d.recenter_every,
            preconditioned: d.preconditioned,
            shrink: d.step_rule.shrink,
            sufficient_decrease: d.step_rule.sufficient_decrease,
            step_initial: d.step_rule.initial,
            step_max: d.step_rule.max,
            step_min: d.step_rule.min,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            grad_tol: match self.tolerance {
                ToleranceMode::Relative => Tolerance::Relative(self.grad_tol),
                ToleranceMode::Absolute => Tolerance::Absolute(self.grad_tol),
            },
            grad_norm: match self.grad_norm {
                NormKind::L2 => GradNorm::L2,
                NormKind::Dual => GradNorm::Dual,
            },
            step_rule: StepRule {
                shrink: self.shrink,
                sufficient_decrease: self.sufficient_decrease,
                initial: self.step_initial,
                max: self.step_max,
                min: self.step_min,
            },
            recenter_every: self.recenter_every,
            preconditioned: self.preconditioned,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(ExpError::Config(format!("[solver] {m}")));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return bad("sufficient_decrease must lie in (0, 1)");
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step_initial && self.step_initial <= self.step_max) {
            return bad("need 0 < step_min <= step_initial <= step_max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    None,
    /// Raw point sample at the kernel singularity.
    UncorrectedSingularCell,
}

/// `[experiment]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub seed: u64,
    pub workers: Option<usize>,
    /// Independent starts for `solve` and `fiber-scan`.
    pub multistarts: usize,
    /// Required agreement of multistart energies.
    pub agree_tol: f64,

    /// Multiplies every verification tolerance.
    pub tolerance_scale: f64,
    pub fault: Fault,
    pub oracle_fields: usize,
    pub gradient_pairs: usize,
    pub fd_step: f64,
    pub extensions: usize,
    pub j_samples: usize,
    pub bound_starts: usize,
    pub bound_safety: f64,

    /// Amplitudes of the defocusing profile, decreasing.
    pub eps: Vec<f64>,

    /// Magnitude of the localized bump.
    pub amplitude: f64,
    pub lengths: Vec<f64>,
    pub overlap_radius: f64,

    pub resolution_study: bool,
    pub tail_tol: f64,

    pub fiber_points: usize,
    pub fiber_lo: f64,
    pub fiber_hi: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: None,
            multistarts: 8,
            agree_tol: 1e-6,
            tolerance_scale: 1.0,
            fault: Fault::None,
            oracle_fields: 20,
            gradient_pairs: 10,
            fd_step: 1e-5,
            extensions: 100,
            j_samples: 50,
            bound_starts: 4,
            bound_safety: 2.0,
            eps: vec![0.5, 0.25, 0.1, 0.05, 0.0],
            amplitude: 0.3,
            lengths: vec![8.0, 16.0, 32.0],
            overlap_radius: 2.0,
            resolution_study: true,
            tail_tol: 1e-8,
            fiber_points: 201,
            fiber_lo: 0.05,
            fiber_hi: 5.0,
        }
    }
}

impl ExperimentSection {
    fn check(&self, kind: Kind, params: &ProblemParams, pot: &PotentialSpec) -> Result<()> {
        let bad = |m: String| Err(ExpError::Config(format!("[experiment] {m}")));
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if !(self.tolerance_scale >= 1.0) {
            return bad("tolerance_scale must be >= 1".into());
        }
        match kind {
            Kind::Solve | Kind::FiberScan if self.multistarts == 0 => {
                return bad("multistarts must be positive".into())
            }
            Kind::FiberScan if !(self.fiber_points >= 3 && 0.0 < self.fiber_lo && self.fiber_lo < 1.0 && self.fiber_hi > 1.0) => {
                return bad("fiber scan needs fiber_points >= 3 and fiber_lo < 1 < fiber_hi".into())
            }
            Kind::Verify
                if self.oracle_fields == 0
                    || self.gradient_pairs == 0
                    || self.extensions == 0
                    || self.j_samples == 0 =>
            {
                return bad("verification sample counts must be positive".into())
            }
            Kind::GammaSweep => {
                if self.eps.is_empty() {
                    return bad("eps list is empty".into());
                }
                if self.eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                    return bad("eps entries must be finite and >= 0".into());
                }
                if self.eps.windows(2).any(|w| w[1] >= w[0]) {
                    return bad("eps list must be strictly decreasing".into());
                }
                if pot.has_localized() {
                    return bad("gamma-sweep requires V_l = 0".into());
                }
                if pot.gamma.is_zero() {
                    return bad("gamma-sweep needs a nonzero Gamma base profile".into());
                }
            }
            Kind::VlSign | Kind::BoxSweep => {
                if self.lengths.is_empty() {
                    return bad("lengths list is empty".into());
                }
                if kind == Kind::BoxSweep && self.lengths.len() < 2 {
                    return bad("box-sweep needs at least two lengths".into());
                }
                let h = 2.0 * params.half_period / params.points as f64;
                for &l in &self.lengths {
                    let n = 2.0 * l / h;
                    if !(l >= 1.0 && l.fract() == 0.0 && (n - n.round()).abs() < 1e-9 && (n.round() as usize).is_multiple_of(2)) {
                        return bad(format!("length {l} is not an integer compatible with spacing {h}"));
                    }
                }
                if self.lengths.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("lengths must be strictly increasing".into());
                }
                if kind == Kind::VlSign {
                    if pot.vl.shape.center().is_none() {
                        return bad("vl-sign needs a [potential.Vl] bump shape".into());
                    }
                    if !(self.amplitude > 0.0) {
                        return bad("amplitude must be positive".into());
                    }
                    if !(self.overlap_radius > 0.0) {
                        return bad("overlap_radius must be positive".into());
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One input text that contributed to the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct InputFile {
    pub path: PathBuf,
    pub text: String,
}

impl InputFile {
    pub fn hash(&self) -> String {
        blob_hash(self.text.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub problem: ProblemConfig,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
    pub inputs: Vec<InputFile>,
}

fn section<T: for<'de> Deserialize<'de> + Default>(root: &mut Table, name: &str) -> Result<T> {
    match root.remove(name) {
        None => Ok(T::default()),
        Some(v) => v
            .try_into()
            .map_err(|e: toml::de::Error| ExpError::Config(format!("[{name}] {}", e.message()))),
    }
}

impl ExperimentConfig {
    /// Parse experiment text. `base` resolves a referenced problem file.
    pub fn parse(text: &str, base: Option<&Path>, kind: Option<Kind>) -> Result<Self> {
        let mut root: Table = text.parse().map_err(|e: toml::de::Error| ExpError::Config(e.to_string()))?;
        let mut inputs = Vec::new();
        let file_kind = match root.remove("kind") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<Kind>()?),
            Some(other) => return Err(ExpError::Config(format!("`kind` must be a string, got {other}"))),
        };
        let kind = match (kind, file_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(ExpError::Config(format!(
                    "config declares kind `{}` but `{}` was requested",
                    b.as_str(),
                    a.as_str()
                )))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(ExpError::Config("experiment kind not given".into())),
        };
        let problem = match root.remove("problem") {
            Some(Value::String(rel)) => {
                if root.contains_key("params") || root.contains_key("potential") {
                    return Err(ExpError::Config(
                        "give either `problem = <path>` or inline [params]/[potential], not both".into(),
                    ));
                }
                let path = base.map(|b| b.join(&rel)).unwrap_or_else(|| PathBuf::from(&rel));
                let ptext = std::fs::read_to_string(&path)
                    .map_err(|e| ExpError::Config(format!("cannot read problem file {}: {e}", path.display())))?;
                let pc = parse_problem(&ptext)?;
                if !pc.extra.is_empty() {
                    let keys: Vec<_> = pc.extra.keys().cloned().collect();
                    return Err(ExpError::Config(format!(
                        "problem file {} has unexpected sections {keys:?}",
                        path.display()
                    )));
                }
                inputs.push(InputFile { path, text: ptext });
                pc
            }
            Some(other) => return Err(ExpError::Config(format!("`problem` must be a path string, got {other}"))),
            None => {
                let mut inline = Table::new();
                for key in ["params", "potential"] {
                    if let Some(v) = root.remove(key) {
                        inline.insert(key.into(), v);
                    }
                }
                parse_problem(&toml::to_string(&inline).map_err(|e| ExpError::Config(e.to_string()))?)?
            }
        };
        let solver: SolverSection = section(&mut root, "solver")?;
        let experiment: ExperimentSection = section(&mut root, "experiment")?;
        if let Some(k) = root.keys().next() {
            return Err(ExpError::Config(format!("unknown top-level key `{k}`")));
        }
        let cfg = Self {
            kind,
            problem,
            solver,
            experiment,
            inputs,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, kind: Option<Kind>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExpError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, path.parent(), kind)?;
        cfg.inputs.insert(
            0,
            InputFile {
                path: path.to_path_buf(),
                text,
            },
        );
        Ok(cfg)
    }

    /// Configuration built in code, with no input files.
    pub fn from_parts(
        kind: Kind,
        params: ProblemParams,
        potential: PotentialSpec,
        solver: SolverSection,
        experiment: ExperimentSection,
    ) -> Result<Self> {
        let cfg = Self {
            kind,
            problem: ProblemConfig {
                params,
                potential,
                extra: Table::new(),
            },
            solver,
            experiment,
            inputs: Vec::new(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        self.solver.check()?;
        self.experiment
            .check(self.kind, &self.problem.params, &self.problem.potential)?;
        let report = self.validation();
        if !report.all_passed() {
            let failed: Vec<String> = report
                .failures()
                .iter()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect();
            return Err(ExpError::Config(format!("problem assumptions fail: {}", failed.join("; "))));
        }
        Ok(())
    }

    pub fn params(&self) -> &ProblemParams {
        &self.problem.params
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.problem.potential
    }

    pub fn validation(&self) -> ValidationReport {
        validate(&self.problem.params, &self.problem.potential)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.solver_config(self.experiment.seed)
    }

    /// Apply command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, workers: Option<usize>) -> Result<Self> {
        if let Some(s) = seed {
            self.experiment.seed = s;
        }
        if let Some(w) = workers {
            self.experiment.workers = Some(w);
        }
        self.check()?;
        Ok(self)
    }

    /// Fully resolved configuration as TOML text.
    pub fn resolved_text(&self) -> String {
        let mut root = problem_table(&self.problem.params, &self.problem.potential);
        root.insert("solver".into(), Value::try_from(&self.solver).expect("solver section serializes"));
        root.insert(
            "experiment".into(),
            Value::try_from(&self.experiment).expect("experiment section serializes"),
        );
        let body = toml::to_string(&root).expect("resolved config serializes");
        format!("kind = \"{}\"\n{body}", self.kind.as_str())
    }

    /// Hash over the resolved configuration and every input text.
    pub fn content_hash(&self) -> String {
        let mut all = self.resolved_text();
        for f in &self.inputs {
            all.push_str(&f.text);
        }
        blob_hash(all.as_bytes())
    }
}
