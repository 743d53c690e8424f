//! Problem parameters, potential descriptors and the standing assumptions.
//!
//! Potentials are closed-form descriptors so a run is reproducible from its
//! configuration text. The periodic parts (`V_p`, `Γ`) have period 1 in every
//! axis, and the box half-period `L` must be an integer, which makes integer
//! translations exact grid permutations.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::grid::{torus_distance, Field, Grid};

/// Dimension, mass, exponents and box geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub mass: f64,
    /// Convolution exponent `p`.
    pub p: f64,
    /// Local exponent `q`.
    pub q: f64,
    /// Riesz order `α`.
    pub alpha: f64,
    pub half_period: f64,
    pub points: usize,
}

impl ProblemParams {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.half_period, self.points)
    }

    /// Upper end of the `q` window, `min(2p, 2N/(N-1))`.
    pub fn q_upper(&self) -> f64 {
        let sobolev = if self.dim == 1 {
            f64::INFINITY
        } else {
            2.0 * self.dim as f64 / (self.dim as f64 - 1.0)
        };
        (2.0 * self.p).min(sobolev)
    }

    /// Lower end of the `α` window, `(N-1)p - N`.
    pub fn alpha_lower(&self) -> f64 {
        (self.dim as f64 - 1.0) * self.p - self.dim as f64
    }
}

/// Profile of a 1-periodic potential (`V_p` or `Γ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PeriodicProfile {
    Zero,
    Constant { value: f64 },
    /// `value + amplitude · mean_a cos(2π x_a)`
    Cosine { value: f64, amplitude: f64 },
}

impl PeriodicProfile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            PeriodicProfile::Zero => 0.0,
            PeriodicProfile::Constant { value } => value,
            PeriodicProfile::Cosine { value, amplitude } => {
                let mean = x
                    .iter()
                    .map(|xi| (2.0 * std::f64::consts::PI * xi).cos())
                    .sum::<f64>()
                    / x.len() as f64;
                value + amplitude * mean
            }
        }
    }

    pub fn scaled(&self, eps: f64) -> Self {
        match *self {
            PeriodicProfile::Zero => PeriodicProfile::Zero,
            PeriodicProfile::Constant { value } => PeriodicProfile::Constant { value: eps * value },
            PeriodicProfile::Cosine { value, amplitude } => PeriodicProfile::Cosine {
                value: eps * value,
                amplitude: eps * amplitude,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            PeriodicProfile::Zero => true,
            PeriodicProfile::Constant { value } => value == 0.0,
            PeriodicProfile::Cosine { value, amplitude } => value == 0.0 && amplitude == 0.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PeriodicProfile::Zero => "zero",
            PeriodicProfile::Constant { .. } => "constant",
            PeriodicProfile::Cosine { .. } => "cosine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignMode {
    Zero,
    Negative,
    Positive,
}

impl SignMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignMode::Zero => "zero",
            SignMode::Negative => "negative",
            SignMode::Positive => "positive",
        }
    }
}

/// Decaying shape of the localized potential, centred on the torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LocalShape {
    Zero,
    /// `amplitude · exp(-|x - c|² / (2 width²))`
    Gaussian {
        amplitude: f64,
        width: f64,
        center: Vec<f64>,
    },
    /// `amplitude · (1 + |x - c|² / width²)^(-exponent / 2)`
    InversePower {
        amplitude: f64,
        width: f64,
        exponent: f64,
        center: Vec<f64>,
    },
}

impl LocalShape {
    pub fn tag(&self) -> &'static str {
        match self {
            LocalShape::Zero => "zero",
            LocalShape::Gaussian { .. } => "gaussian-bump",
            LocalShape::InversePower { .. } => "inverse-power-bump",
        }
    }

    pub fn center(&self) -> Option<&[f64]> {
        match self {
            LocalShape::Zero => None,
            LocalShape::Gaussian { center, .. } | LocalShape::InversePower { center, .. } => {
                Some(center)
            }
        }
    }

    pub fn with_amplitude(&self, a: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            LocalShape::Zero => {}
            LocalShape::Gaussian { amplitude, .. } | LocalShape::InversePower { amplitude, .. } => {
                *amplitude = a
            }
        }
        s
    }

    fn eval(&self, grid: &Grid, x: &[f64]) -> f64 {
        match self {
            LocalShape::Zero => 0.0,
            LocalShape::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let r = torus_distance(grid, x, center);
                amplitude * (-(r * r) / (2.0 * width * width)).exp()
            }
            LocalShape::InversePower {
                amplitude,
                width,
                exponent,
                center,
            } => {
                let r = torus_distance(grid, x, center);
                amplitude * (1.0 + (r / width).powi(2)).powf(-exponent / 2.0)
            }
        }
    }
}

/// Localized potential `V_l` with its declared sign mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizedProfile {
    pub sign: SignMode,
    pub shape: LocalShape,
    /// Declared `L^s` integrability exponent; recorded, not checked.
    pub integrability: Option<f64>,
}

impl LocalizedProfile {
    pub fn zero() -> Self {
        Self {
            sign: SignMode::Zero,
            shape: LocalShape::Zero,
            integrability: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub vp: PeriodicProfile,
    pub vl: LocalizedProfile,
    pub gamma: PeriodicProfile,
}

impl PotentialSpec {
    pub fn new(vp: PeriodicProfile, vl: LocalizedProfile, gamma: PeriodicProfile) -> Self {
        Self { vp, vl, gamma }
    }

    /// Same potential with `V_l` stripped.
    pub fn periodic_part(&self) -> Self {
        Self {
            vp: self.vp,
            vl: LocalizedProfile::zero(),
            gamma: self.gamma,
        }
    }

    pub fn with_gamma_scaled(&self, eps: f64) -> Self {
        Self {
            gamma: self.gamma.scaled(eps),
            ..self.clone()
        }
    }

    pub fn with_localized(&self, vl: LocalizedProfile) -> Self {
        Self { vl, ..self.clone() }
    }

    pub fn has_localized(&self) -> bool {
        self.vl.sign != SignMode::Zero
    }
}

/// One assumption check with its witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Witness value (e.g. grid minimum of `V`).
    pub witness: Option<f64>,
    /// Location of the witness, when it is a grid point.
    pub location: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Turn a failed report into an error listing the failed assumptions.
    pub fn into_result(self) -> Result<Self> {
        if self.all_passed() {
            Ok(self)
        } else {
            let msg = self
                .failures()
                .iter()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect::<Vec<_>>()
                .join("; ");
            Err(CoreError::InvalidParameter(msg))
        }
    }
}

fn check(name: &'static str, passed: bool, detail: String, witness: Option<f64>) -> AssumptionCheck {
    AssumptionCheck {
        name,
        passed,
        detail,
        witness,
        location: None,
    }
}

/// Evaluate every standing assumption. Never fails; callers reject on any
/// failed entry.
pub fn validate(params: &ProblemParams, pot: &PotentialSpec) -> ValidationReport {
    let ProblemParams {
        dim,
        mass,
        p,
        q,
        alpha,
        half_period,
        points,
    } = *params;
    let nf = dim as f64;
    let mut checks = vec![
        check(
            "dimension",
            (1..=3).contains(&dim),
            format!("N = {dim} (supported: 1, 2, 3)"),
            Some(nf),
        ),
        check("mass", mass > 0.0, format!("m = {mass} > 0"), Some(mass)),
        check("(N) p >= 2", p >= 2.0, format!("p = {p} >= 2"), Some(p)),
        check(
            "(N) alpha lower",
            params.alpha_lower() < alpha,
            format!("(N-1)p - N = {} < alpha = {alpha}", params.alpha_lower()),
            Some(alpha - params.alpha_lower()),
        ),
        check(
            "(N) alpha < N",
            alpha < nf,
            format!("alpha = {alpha} < N = {dim}"),
            Some(nf - alpha),
        ),
        check("(N) q > 2", q > 2.0, format!("q = {q} > 2"), Some(q - 2.0)),
        check(
            "(N) q upper",
            q < params.q_upper(),
            format!("q = {q} < min(2p, 2N/(N-1)) = {}", params.q_upper()),
            Some(params.q_upper() - q),
        ),
    ];

    let integer_box = half_period > 0.0 && half_period.fract() == 0.0;
    checks.push(check(
        "box",
        integer_box,
        format!("L = {half_period} must be a positive integer"),
        Some(half_period),
    ));
    let cells_ok = integer_box && points % (2 * half_period as usize).max(1) == 0;
    checks.push(check(
        "grid",
        points >= 8 && points % 2 == 0 && cells_ok,
        format!("n = {points} must be even, >= 8 and a multiple of 2L"),
        Some(points as f64),
    ));

    let grid = match params.grid() {
        Ok(g) if (1..=3).contains(&dim) => g,
        _ => {
            checks.push(check(
                "potentials",
                false,
                "grid could not be constructed; potentials not sampled".into(),
                None,
            ));
            return ValidationReport { checks };
        }
    };

    let (vp, vl, gamma) = sample_unchecked(pot, &grid);
    checks.push(sign_check(&grid, &pot.vl, &vl));

    match pot.vl.sign {
        SignMode::Zero | SignMode::Negative => {
            let v = vp.add(&vl).expect("same grid");
            let (j, vmin) = argmin(&v);
            let mut c = check(
                "(V2)",
                vmin > 0.0,
                format!("min V = {vmin:.6e} > 0"),
                Some(vmin),
            );
            c.location = Some(grid.coords(j)[..dim].to_vec());
            checks.push(c);
        }
        SignMode::Positive => {
            let (j, vmin) = argmin(&vp);
            let mut c = check(
                "(V3)",
                vmin > 0.0,
                format!("min V_p = {vmin:.6e} > 0"),
                Some(vmin),
            );
            c.location = Some(grid.coords(j)[..dim].to_vec());
            checks.push(c);
        }
    }

    let (j, gmin) = argmin(&gamma);
    let mut c = check(
        "(Gamma)",
        gmin >= 0.0,
        format!("min Gamma = {gmin:.6e} >= 0"),
        Some(gmin),
    );
    c.location = Some(grid.coords(j)[..dim].to_vec());
    checks.push(c);

    ValidationReport { checks }
}

fn argmin(f: &Field) -> (usize, f64) {
    f.values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (j, v)| if v < best.1 { (j, v) } else { best })
}

fn sign_check(grid: &Grid, profile: &LocalizedProfile, vl: &Field) -> AssumptionCheck {
    let bad = vl.values().iter().position(|&v| match profile.sign {
        SignMode::Zero => v != 0.0,
        SignMode::Negative => v >= 0.0,
        SignMode::Positive => v <= 0.0,
    });
    let shape_consistent = matches!(
        (profile.sign, &profile.shape),
        (SignMode::Zero, LocalShape::Zero) | (SignMode::Negative | SignMode::Positive, LocalShape::Gaussian { .. } | LocalShape::InversePower { .. })
    );
    match bad {
        None if shape_consistent => check(
            "(V1) sign",
            true,
            format!("V_l sign mode `{}` holds on every node", profile.sign.as_str()),
            None,
        ),
        None => check(
            "(V1) sign",
            false,
            format!(
                "sign mode `{}` inconsistent with shape `{}`",
                profile.sign.as_str(),
                profile.shape.tag()
            ),
            None,
        ),
        Some(j) => {
            let x = grid.coords(j)[..grid.dim()].to_vec();
            AssumptionCheck {
                name: "(V1) sign",
                passed: false,
                detail: format!(
                    "sign mode `{}` violated: V_l({x:?}) = {:.6e}",
                    profile.sign.as_str(),
                    vl.values()[j]
                ),
                witness: Some(vl.values()[j]),
                location: Some(x),
            }
        }
    }
}

fn sample_unchecked(pot: &PotentialSpec, grid: &Grid) -> (Field, Field, Field) {
    let vp = Field::from_fn(*grid, |x| pot.vp.eval(x));
    let vl = Field::from_fn(*grid, |x| pot.vl.shape.eval(grid, x));
    let gamma = Field::from_fn(*grid, |x| pot.gamma.eval(x));
    (vp, vl, gamma)
}

/// Sample `(V_p, V_l, Γ)` at the grid nodes.
pub fn sample_potentials(
    params: &ProblemParams,
    pot: &PotentialSpec,
    grid: &Grid,
) -> Result<(Field, Field, Field)> {
    if grid.dim() != params.dim {
        return Err(CoreError::GridMismatch(format!(
            "grid dimension {} vs problem dimension {}",
            grid.dim(),
            params.dim
        )));
    }
    if let Some(c) = pot.vl.shape.center() {
        if c.len() != params.dim {
            return Err(CoreError::InvalidParameter(format!(
                "V_l centre has {} components, expected {}",
                c.len(),
                params.dim
            )));
        }
    }
    Ok(sample_unchecked(pot, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, p: f64, alpha: f64, q: f64) -> ProblemParams {
        ProblemParams {
            dim,
            mass: 1.0,
            p,
            q,
            alpha,
            half_period: 4.0,
            points: 32,
        }
    }

    fn flat_potential() -> PotentialSpec {
        PotentialSpec::new(
            PeriodicProfile::Constant { value: 1.0 },
            LocalizedProfile::zero(),
            PeriodicProfile::Zero,
        )
    }

    #[test]
    fn one_dimensional_default_passes() {
        let r = validate(&params(1, 2.0, 0.5, 3.0), &flat_potential());
        assert!(r.all_passed(), "{:?}", r.failures());
        assert_eq!(r.check("(N) alpha lower").unwrap().witness, Some(1.5));
    }

    #[test]
    fn alpha_window_in_two_dimensions() {
        assert!(validate(&params(2, 2.0, 0.5, 3.0), &flat_potential()).all_passed());
        let r = validate(&params(2, 2.0, 2.5, 3.0), &flat_potential());
        assert!(!r.check("(N) alpha < N").unwrap().passed);
        assert_eq!(r.failures().len(), 1);
    }

    #[test]
    fn q_window() {
        // 2N/(N-1) = 3 in three dimensions
        let r = validate(&params(3, 2.0, 2.0, 3.0), &flat_potential());
        assert!(!r.check("(N) q upper").unwrap().passed);
        let r = validate(&params(1, 2.0, 0.5, 4.0), &flat_potential());
        assert!(!r.check("(N) q upper").unwrap().passed);
        let r = validate(&params(1, 2.0, 0.5, 2.0), &flat_potential());
        assert!(!r.check("(N) q > 2").unwrap().passed);
    }

    #[test]
    fn wrong_sign_reports_witness_location() {
        let pot = PotentialSpec::new(
            PeriodicProfile::Constant { value: 1.0 },
            LocalizedProfile {
                sign: SignMode::Negative,
                shape: LocalShape::Gaussian {
                    amplitude: 0.1,
                    width: 1.0,
                    center: vec![0.0],
                },
                integrability: None,
            },
            PeriodicProfile::Zero,
        );
        let r = validate(&params(1, 2.0, 0.5, 3.0), &pot);
        let c = r.check("(V1) sign").unwrap();
        assert!(!c.passed);
        assert!(c.witness.unwrap() > 0.0);
        assert!(c.location.is_some());
        assert!(r.clone().into_result().is_err());
    }

    #[test]
    fn positive_bump_checks_periodic_part_only() {
        let pot = PotentialSpec::new(
            PeriodicProfile::Constant { value: 0.5 },
            LocalizedProfile {
                sign: SignMode::Positive,
                shape: LocalShape::InversePower {
                    amplitude: 0.3,
                    width: 1.0,
                    exponent: 2.0,
                    center: vec![0.0],
                },
                integrability: Some(1.0),
            },
            PeriodicProfile::Constant { value: 0.2 },
        );
        let r = validate(&params(1, 2.0, 0.5, 3.0), &pot);
        assert!(r.all_passed());
        assert_eq!(r.check("(V3)").unwrap().witness, Some(0.5));
    }

    #[test]
    fn negative_potential_fails_v2() {
        let pot = PotentialSpec::new(
            PeriodicProfile::Constant { value: 0.2 },
            LocalizedProfile {
                sign: SignMode::Negative,
                shape: LocalShape::Gaussian {
                    amplitude: -0.5,
                    width: 1.0,
                    center: vec![0.0],
                },
                integrability: None,
            },
            PeriodicProfile::Zero,
        );
        let r = validate(&params(1, 2.0, 0.5, 3.0), &pot);
        let c = r.check("(V2)").unwrap();
        assert!(!c.passed);
        assert!((c.witness.unwrap() + 0.3).abs() < 1e-12);
        assert_eq!(c.location.as_deref(), Some(&[0.0][..]));
    }

    #[test]
    fn negative_gamma_fails() {
        let mut pot = flat_potential();
        pot.gamma = PeriodicProfile::Cosine {
            value: 0.1,
            amplitude: 0.5,
        };
        assert!(!validate(&params(1, 2.0, 0.5, 3.0), &pot).check("(Gamma)").unwrap().passed);
    }

    #[test]
    fn non_integer_box_rejected() {
        let mut pr = params(1, 2.0, 0.5, 3.0);
        pr.half_period = 2.5;
        pr.points = 40;
        assert!(!validate(&pr, &flat_potential()).check("box").unwrap().passed);
        let mut pr = params(1, 2.0, 0.5, 3.0);
        pr.points = 36; // 1/h = 4.5
        assert!(!validate(&pr, &flat_potential()).check("grid").unwrap().passed);
    }

    #[test]
    fn validation_is_deterministic() {
        let pr = params(2, 2.0, 0.5, 3.0);
        assert_eq!(validate(&pr, &flat_potential()), validate(&pr, &flat_potential()));
    }

    #[test]
    fn sampled_profiles() {
        let pr = params(1, 2.0, 0.5, 3.0);
        let grid = pr.grid().unwrap();
        let pot = PotentialSpec::new(
            PeriodicProfile::Constant { value: 2.0 },
            LocalizedProfile {
                sign: SignMode::Negative,
                shape: LocalShape::Gaussian {
                    amplitude: -0.5,
                    width: 1.0,
                    center: vec![0.0],
                },
                integrability: Some(1.0),
            },
            PeriodicProfile::Cosine {
                value: 1.0,
                amplitude: 0.5,
            },
        );
        let (vp, vl, gamma) = sample_potentials(&pr, &pot, &grid).unwrap();
        assert!(vp.values().iter().all(|&v| v == 2.0));
        let centre = grid.flat_index(&[grid.points() / 2]);
        assert_eq!(vl.argmax_abs(), centre);
        assert!((vl.values()[centre] + 0.5).abs() < 1e-15);
        assert!(vl.values()[0].abs() < 1e-3);
        // one unit = 4 cells; Γ repeats exactly
        for j in 0..grid.len() - 4 {
            assert!((gamma.values()[j] - gamma.values()[j + 4]).abs() < 1e-14);
        }
        let zero = PotentialSpec::new(PeriodicProfile::Zero, LocalizedProfile::zero(), PeriodicProfile::Zero);
        let (_, _, g0) = sample_potentials(&pr, &zero, &grid).unwrap();
        assert!(g0.values().iter().all(|&v| v == 0.0));
    }
}
