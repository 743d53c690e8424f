//! Half-space realization of `√(−Δ + m²)`.
//!
//! The extension `v` of boundary data `u` solves `−Δv + m²v = 0` in
//! `(0, ∞) × box`, and `Tu = −∂ₓv(0, ·)` is the Dirichlet-to-Neumann map.
//! In the boundary-spectral variable the extension is explicit,
//! `v̂(x, ξ) = û(ξ) e^{−x λ(ξ)}` with `λ = √(|ξ|² + m²)`, so the only
//! discretization error sits in the wall direction `x`. That direction uses a
//! geometric grid clustered toward `x = 0`, second-order finite differences
//! and the trapezoid rule.
//!
//! Nothing here runs inside the solver; it is an independent oracle for the
//! boundary representation used there.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::grid::{forward, inverse, l2_norm2, Field, Grid, SpectralField};

pub const DEFAULT_WALL_POINTS: usize = 512;
pub const DEFAULT_WALL_RATIO: f64 = 1.01;
/// The wall is cut where `e^{−m x}` falls below this.
pub const DEFAULT_WALL_DECAY: f64 = 1e-10;

/// Nodes `x_j = x_max (r^j − 1)/(r^{nx−1} − 1)`, `j = 0..nx` (uniform when `r = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct WallGrid {
    grid: Grid,
    x_max: f64,
    ratio: f64,
    nodes: Vec<f64>,
}

impl WallGrid {
    pub fn new(grid: Grid, x_max: f64, nx: usize, ratio: f64) -> Result<Self> {
        if nx < 16 {
            return Err(CoreError::InvalidParameter(format!("wall needs nx >= 16, got {nx}")));
        }
        if !(x_max > 0.0) || !(ratio >= 1.0) || !ratio.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "wall needs x_max > 0 and ratio >= 1 (x_max = {x_max}, ratio = {ratio})"
            )));
        }
        let last = (nx - 1) as f64;
        let nodes = (0..nx)
            .map(|j| {
                if j == nx - 1 {
                    x_max
                } else if ratio == 1.0 {
                    x_max * j as f64 / last
                } else {
                    x_max * (ratio.powi(j as i32) - 1.0) / (ratio.powi(nx as i32 - 1) - 1.0)
                }
            })
            .collect();
        Ok(Self {
            grid,
            x_max,
            ratio,
            nodes,
        })
    }

    /// Default resolution: 512 nodes, ratio 1.01, `e^{−m x_max} = 1e−10`.
    pub fn default_for(grid: Grid, mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(CoreError::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        Self::new(grid, -DEFAULT_WALL_DECAY.ln() / mass, DEFAULT_WALL_POINTS, DEFAULT_WALL_RATIO)
    }

    /// Insert a node between every pair: `nx → 2nx − 1`, `r → √r`. The old
    /// nodes are kept and the near-wall steps roughly halve.
    pub fn refined(&self) -> Self {
        Self::new(self.grid, self.x_max, 2 * self.nx() - 1, self.ratio.sqrt()).expect("refinement keeps validity")
    }

    /// Same node distribution on a taller wall.
    pub fn with_height(&self, x_max: f64) -> Result<Self> {
        Self::new(self.grid, x_max, self.nx(), self.ratio)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn nx(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// First step `x_1 − x_0`.
    pub fn first_step(&self) -> f64 {
        self.nodes[1]
    }

    /// Trapezoid weights in `x`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let x = &self.nodes;
        let n = x.len();
        let mut w = vec![0.0; n];
        for j in 0..n - 1 {
            let h = x[j + 1] - x[j];
            w[j] += 0.5 * h;
            w[j + 1] += 0.5 * h;
        }
        w
    }

    /// First-derivative stencil at node `j`: second order, one-sided at the ends.
    fn d1_stencil(&self, j: usize) -> ([usize; 3], [f64; 3]) {
        let x = &self.nodes;
        let n = x.len();
        if j == 0 {
            let (a, b) = (x[1] - x[0], x[2] - x[1]);
            ([0, 1, 2], [-(2.0 * a + b) / (a * (a + b)), (a + b) / (a * b), -a / (b * (a + b))])
        } else if j == n - 1 {
            let (a, b) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
            (
                [n - 1, n - 2, n - 3],
                [(2.0 * a + b) / (a * (a + b)), -(a + b) / (a * b), a / (b * (a + b))],
            )
        } else {
            let (hm, hp) = (x[j] - x[j - 1], x[j + 1] - x[j]);
            (
                [j - 1, j, j + 1],
                [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))],
            )
        }
    }

    /// Second-derivative stencil at an interior node.
    fn d2_stencil(&self, j: usize) -> [f64; 3] {
        let x = &self.nodes;
        let (hm, hp) = (x[j] - x[j - 1], x[j + 1] - x[j]);
        [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))]
    }
}

/// Function on the wall grid times the boundary grid, stored row by row
/// (`values[j · n^N + k]` is `v(x_j, y_k)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    wall: WallGrid,
    values: Vec<f64>,
}

impl ExtendedField {
    pub fn new(wall: WallGrid, values: Vec<f64>) -> Result<Self> {
        let expected = wall.nx() * wall.grid().len();
        if values.len() != expected {
            return Err(CoreError::SizeMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { wall, values })
    }

    /// `v(x, y) = profile(x) · u(y)`.
    pub fn separable(wall: WallGrid, u: &Field, profile: impl Fn(f64) -> f64) -> Result<Self> {
        wall.grid().check_same(u.grid())?;
        let mut values = Vec::with_capacity(wall.nx() * u.grid().len());
        for &x in wall.nodes() {
            let s = profile(x);
            values.extend(u.values().iter().map(|v| s * v));
        }
        Self::new(wall, values)
    }

    pub fn wall(&self) -> &WallGrid {
        &self.wall
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let len = self.wall.grid().len();
        &self.values[j * len..(j + 1) * len]
    }

    fn row_field(&self, j: usize) -> Field {
        Field::from_raw(*self.wall.grid(), self.row(j).to_vec())
    }

    /// Boundary trace `γ(v)`, the row at `x = 0`.
    pub fn trace(&self) -> Field {
        self.row_field(0)
    }

    /// `∂ₓ v` on every node.
    pub fn dx(&self) -> Vec<f64> {
        let len = self.wall.grid().len();
        let mut out = vec![0.0; self.values.len()];
        for j in 0..self.wall.nx() {
            let (idx, w) = self.wall.d1_stencil(j);
            let dst = &mut out[j * len..(j + 1) * len];
            for (i, wi) in idx.iter().zip(w) {
                for (d, v) in dst.iter_mut().zip(self.row(*i)) {
                    *d += wi * v;
                }
            }
        }
        out
    }

    /// Trapezoid-in-`x` integral of a per-row boundary integral.
    fn integrate_rows(&self, per_row: impl Fn(usize) -> f64) -> f64 {
        self.wall
            .trapezoid_weights()
            .iter()
            .enumerate()
            .map(|(j, w)| w * per_row(j))
            .sum()
    }

    /// `∬ v²`.
    pub fn volume_l2_norm2(&self) -> f64 {
        self.integrate_rows(|j| l2_norm2(&self.row_field(j)))
    }

    /// `∬ |v|^s`.
    pub fn volume_lp_pow(&self, s: f64) -> f64 {
        let dv = self.wall.grid().cell_volume();
        self.integrate_rows(|j| dv * self.row(j).iter().map(|v| v.abs().powf(s)).sum::<f64>())
    }

    /// `∬ |∂ₓ v|²`.
    pub fn volume_dx_norm2(&self) -> f64 {
        let dx = self.dx();
        let len = self.wall.grid().len();
        let dv = self.wall.grid().cell_volume();
        self.integrate_rows(|j| dv * dx[j * len..(j + 1) * len].iter().map(|v| v * v).sum::<f64>())
    }

    /// `∬ |∇_y v|²`, spectral in `y`.
    pub fn volume_dy_norm2(&self) -> f64 {
        self.integrate_rows(|j| gradient_norm2(&forward(&self.row_field(j))))
    }

    /// `∬ |∇v|²`.
    pub fn volume_grad_norm2(&self) -> f64 {
        self.volume_dx_norm2() + self.volume_dy_norm2()
    }

    /// Squared `H¹` norm `∬ |∇v|² + ∬ v²`.
    pub fn h1_norm2(&self) -> f64 {
        self.volume_grad_norm2() + self.volume_l2_norm2()
    }
}

/// `∫ |∇f|²` from the coefficients of `f` (Parseval).
fn gradient_norm2(s: &SpectralField) -> f64 {
    let g = s.grid();
    g.volume()
        * s.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| g.freq_norm2(k) * c.norm_sqr())
            .sum::<f64>()
}

fn lambda(grid: &Grid, k: usize, m: f64) -> f64 {
    (grid.freq_norm2(k) + m * m).sqrt()
}

/// `v̂(x_j, ξ) = û(ξ) e^{−x_j λ(ξ)}`; row 0 is `u` itself.
pub fn harmonic_extend(u: &Field, wall: &WallGrid, m: f64) -> Result<ExtendedField> {
    if !(m > 0.0) {
        return Err(CoreError::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let grid = *wall.grid();
    grid.check_same(u.grid())?;
    let uhat = forward(u);
    let lam: Vec<f64> = (0..grid.len()).map(|k| lambda(&grid, k, m)).collect();
    let mut values = Vec::with_capacity(wall.nx() * grid.len());
    values.extend_from_slice(u.values());
    for &x in &wall.nodes()[1..] {
        let mut s = uhat.clone();
        for (c, l) in s.coeffs_mut().iter_mut().zip(&lam) {
            *c *= (-x * l).exp();
        }
        values.extend(inverse(&s).into_values());
    }
    ExtendedField::new(wall.clone(), values)
}

/// `Tu = −∂ₓ v(0, ·)` with a second-order one-sided stencil.
pub fn dtn_apply(u: &Field, wall: &WallGrid, m: f64) -> Result<Field> {
    if !(m > 0.0) {
        return Err(CoreError::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let grid = *wall.grid();
    grid.check_same(u.grid())?;
    let (nodes, w) = wall.d1_stencil(0);
    let x = [wall.nodes()[nodes[0]], wall.nodes()[nodes[1]], wall.nodes()[nodes[2]]];
    let mut s = forward(u);
    s.multiply(|k| {
        let l = lambda(&grid, k, m);
        -(w[0] * (-x[0] * l).exp() + w[1] * (-x[1] * l).exp() + w[2] * (-x[2] * l).exp())
    });
    Ok(inverse(&s))
}

/// Max-norm of `−∂ₓₓv − Δ_y v + m²v` over interior wall nodes, relative to
/// the max-norm of `m² v` (both over the interior rows).
pub fn extension_residual(v: &ExtendedField, m: f64) -> f64 {
    let wall = v.wall();
    let grid = *wall.grid();
    let len = grid.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 1..wall.nx() - 1 {
        let w = wall.d2_stencil(j);
        let row = v.row_field(j);
        let lap_y = crate::grid::apply_multiplier(&row, |k| grid.freq_norm2(k));
        for k in 0..len {
            let dxx = w[0] * v.values[(j - 1) * len + k] + w[1] * v.values[j * len + k] + w[2] * v.values[(j + 1) * len + k];
            let r = -dxx + lap_y.values()[k] + m * m * row.values()[k];
            worst = worst.max(r.abs());
            scale = scale.max((m * m * row.values()[k]).abs());
        }
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// `Q(v) = ∬|∇v|² + m²∬v² + ∫(V − m) γ(v)²`.
pub fn q_form_volume(v: &ExtendedField, potential: &Field, m: f64) -> Result<f64> {
    v.wall().grid().check_same(potential.grid())?;
    let trace = v.trace();
    let boundary: f64 = trace
        .values()
        .iter()
        .zip(potential.values())
        .map(|(u, vv)| (vv - m) * u * u)
        .sum::<f64>()
        * trace.grid().cell_volume();
    Ok(v.volume_grad_norm2() + m * m * v.volume_l2_norm2() + boundary)
}

/// Both sides of one inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalitySides {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalitySides {
    /// `(rhs − lhs) / max(|lhs|, |rhs|)`, zero when both vanish.
    pub fn relative_margin(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.rhs - self.lhs) / scale
        }
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.relative_margin() >= -rel_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityReport {
    /// `|γ(v)|_p^p ≤ p |v|_{2(p−1)}^{p−1} |∂ₓv|₂`
    pub trace_lp: InequalitySides,
    /// `∫γ(v)² ≤ m ∬|∇v|² + (1/m) ∬v²`
    pub trace_l2: InequalitySides,
}

impl InequalityReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.trace_lp.holds(rel_tol) && self.trace_l2.holds(rel_tol)
    }
}

pub fn check_trace_inequalities(v: &ExtendedField, m: f64, p: f64) -> InequalityReport {
    let trace = v.trace();
    let dv = trace.grid().cell_volume();
    let lhs_p = dv * trace.values().iter().map(|u| u.abs().powf(p)).sum::<f64>();
    let vol_pow = v.volume_lp_pow(2.0 * (p - 1.0)).sqrt();
    let dx = v.volume_dx_norm2().sqrt();
    let trace_lp = InequalitySides {
        lhs: lhs_p,
        rhs: p * vol_pow * dx,
    };
    let trace_l2 = InequalitySides {
        lhs: l2_norm2(&trace),
        rhs: m * v.volume_grad_norm2() + v.volume_l2_norm2() / m,
    };
    InequalityReport { trace_lp, trace_l2 }
}

/// Constants of `c_lo ‖v‖²_{H¹} ≤ Q(v) ≤ c_hi ‖v‖²_{H¹}` built from the
/// lower and upper estimates of `Q` through the trace bound.
///
/// The lower constant is `min{min{1, V₀/m}, min{m², V₀}}` with `V₀` the
/// grid infimum of `V`; the estimate it comes from is valid for `m ≥ 1`.
/// The upper constant is `max{1 + b m, m² + b/m}` with `b = (‖V‖∞ − m)⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEquivalence {
    pub lower: f64,
    pub upper: f64,
}

impl NormEquivalence {
    pub fn from_potential(potential: &Field, m: f64) -> Self {
        let v0 = potential.min();
        let vinf = potential.max_abs();
        let lower = (1.0f64).min(v0 / m).min((m * m).min(v0));
        let b = (vinf - m).max(0.0);
        let upper = (1.0 + b * m).max(m * m + b / m);
        Self { lower, upper }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSandwich {
    pub constants: NormEquivalence,
    pub q: f64,
    pub h1_norm2: f64,
}

impl NormSandwich {
    /// `c_lo ‖v‖² ≤ Q ≤ c_hi ‖v‖²` up to `rel_tol · ‖v‖²`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.h1_norm2;
        self.constants.lower * self.h1_norm2 <= self.q + slack
            && self.q <= self.constants.upper * self.h1_norm2 + slack
    }
}

pub fn check_norm_equivalence(v: &ExtendedField, potential: &Field, m: f64) -> Result<NormSandwich> {
    Ok(NormSandwich {
        constants: NormEquivalence::from_potential(potential, m),
        q: q_form_volume(v, potential, m)?,
        h1_norm2: v.h1_norm2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SqrtOp;
    use crate::random::{rng, smooth_noise};

    fn grid() -> Grid {
        Grid::new(1, 4.0, 32).unwrap()
    }

    #[test]
    fn wall_nodes_are_nested_under_refinement() {
        let wall = WallGrid::new(grid(), 10.0, 64, 1.1).unwrap();
        let fine = wall.refined();
        assert_eq!(fine.nx(), 127);
        for (j, x) in wall.nodes().iter().enumerate() {
            assert!((fine.nodes()[2 * j] - x).abs() <= 1e-12 * x.max(1.0));
        }
        let ratio = wall.first_step() / fine.first_step();
        assert!((ratio - (1.1f64.sqrt() + 1.0)).abs() < 1e-9);
        assert_eq!(*wall.nodes().last().unwrap(), 10.0);
    }

    #[test]
    fn wall_rejects_bad_parameters() {
        assert!(WallGrid::new(grid(), 10.0, 8, 1.1).is_err());
        assert!(WallGrid::new(grid(), -1.0, 32, 1.1).is_err());
        assert!(WallGrid::new(grid(), 1.0, 32, 0.9).is_err());
    }

    #[test]
    fn constant_extends_exponentially() {
        let wall = WallGrid::default_for(grid(), 1.5).unwrap();
        let v = harmonic_extend(&Field::constant(grid(), 2.0), &wall, 1.5).unwrap();
        for (j, x) in wall.nodes().iter().enumerate() {
            let want = 2.0 * (-1.5 * x).exp();
            assert!(v.row(j).iter().all(|a| (a - want).abs() < 1e-13));
        }
    }

    #[test]
    fn trace_reproduces_boundary_data() {
        let u = smooth_noise(&grid(), 0.7, &mut rng(3));
        let wall = WallGrid::default_for(grid(), 1.0).unwrap();
        let v = harmonic_extend(&u, &wall, 1.0).unwrap();
        assert_eq!(v.trace(), u);
    }

    #[test]
    fn dtn_of_zero_is_zero() {
        let wall = WallGrid::default_for(grid(), 1.0).unwrap();
        let t = dtn_apply(&Field::zeros(grid()), &wall, 1.0).unwrap();
        assert_eq!(t.max_abs(), 0.0);
    }

    #[test]
    fn dtn_single_mode_converges_at_second_order() {
        let g = grid();
        let xi = std::f64::consts::PI / 4.0;
        let u = Field::from_fn(g, |x| (xi * x[0]).cos());
        let exact = (xi * xi + 1.0f64).sqrt();
        let mut wall = WallGrid::new(g, 23.0, 64, 1.05).unwrap();
        let mut errs = Vec::new();
        for _ in 0..4 {
            let t = dtn_apply(&u, &wall, 1.0).unwrap();
            let e = t.sub(&u.scaled(exact)).unwrap().max_abs();
            errs.push(e);
            wall = wall.refined();
        }
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!(slope >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn dtn_agrees_with_spectral_square_root() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let op = SqrtOp::new(g, 1.0).unwrap();
        let wall = WallGrid::default_for(g, 1.0).unwrap();
        let u = smooth_noise(&g, 0.5, &mut rng(11));
        let a = op.apply(&u).unwrap();
        let b = dtn_apply(&u, &wall, 1.0).unwrap();
        let rel = (l2_norm2(&a.sub(&b).unwrap()) / l2_norm2(&a)).sqrt();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn dtn_squared_is_the_schrodinger_operator() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let wall = WallGrid::default_for(g, 1.0).unwrap();
        let u = smooth_noise(&g, 0.5, &mut rng(12));
        let tt = dtn_apply(&dtn_apply(&u, &wall, 1.0).unwrap(), &wall, 1.0).unwrap();
        let target = crate::grid::apply_multiplier(&u, |k| g.freq_norm2(k) + 1.0);
        let rel = (l2_norm2(&tt.sub(&target).unwrap()) / l2_norm2(&target)).sqrt();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn residual_decreases_under_refinement() {
        let u = smooth_noise(&grid(), 0.7, &mut rng(5));
        let mut wall = WallGrid::new(grid(), 23.0, 64, 1.05).unwrap();
        let mut res = Vec::new();
        for _ in 0..3 {
            res.push(extension_residual(&harmonic_extend(&u, &wall, 1.0).unwrap(), 1.0));
            wall = wall.refined();
        }
        assert!(res[1] < res[0] && res[2] < res[1], "{res:?}");
        assert!(res[0] / res[2] > 10.0, "{res:?}");
    }

    #[test]
    fn volume_form_matches_boundary_symbol() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let m = 1.0;
        let op = SqrtOp::new(g, m).unwrap();
        let vpot = Field::from_fn(g, |x| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * x[0]).cos());
        let u = smooth_noise(&g, 0.7, &mut rng(9));
        let q_b = crate::grid::l2_inner(&op.apply(&u).unwrap(), &u).unwrap()
            + u.values().iter().zip(vpot.values()).map(|(a, v)| (v - m) * a * a).sum::<f64>() * g.cell_volume();

        let wall = WallGrid::default_for(g, m).unwrap();
        let q_v = q_form_volume(&harmonic_extend(&u, &wall, m).unwrap(), &vpot, m).unwrap();
        let gap = (q_v - q_b).abs() / q_b;
        assert!(gap < 1e-4, "{gap}");

        let fine = wall.refined();
        let q_f = q_form_volume(&harmonic_extend(&u, &fine, m).unwrap(), &vpot, m).unwrap();
        assert!((q_f - q_b).abs() / q_b < gap);
    }

    #[test]
    fn dirichlet_energy_stable_under_wall_doubling() {
        let g = grid();
        let u = smooth_noise(&g, 0.7, &mut rng(4));
        let x_max = -(1e-8f64).ln();
        let a = WallGrid::new(g, x_max, 512, 1.01).unwrap();
        let b = a.with_height(2.0 * x_max).unwrap();
        let ea = harmonic_extend(&u, &a, 1.0).unwrap();
        let eb = harmonic_extend(&u, &b, 1.0).unwrap();
        let da = ea.volume_grad_norm2() + ea.volume_l2_norm2();
        let db = eb.volume_grad_norm2() + eb.volume_l2_norm2();
        assert!(da.is_finite() && db.is_finite());
        assert!((da - db).abs() / da < 1e-3, "{da} {db}");
    }

    #[test]
    fn zero_field_gives_equalities() {
        let wall = WallGrid::default_for(grid(), 1.0).unwrap();
        let v = harmonic_extend(&Field::zeros(grid()), &wall, 1.0).unwrap();
        let r = check_trace_inequalities(&v, 1.0, 2.0);
        assert_eq!(r.trace_lp.lhs, 0.0);
        assert_eq!(r.trace_lp.rhs, 0.0);
        assert!(r.holds(0.0));
        assert_eq!(q_form_volume(&v, &Field::constant(grid(), 2.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pure_dirichlet_energy_when_potential_equals_mass() {
        let wall = WallGrid::default_for(grid(), 1.0).unwrap();
        let u = smooth_noise(&grid(), 0.7, &mut rng(2));
        let v = harmonic_extend(&u, &wall, 1.0).unwrap();
        let q = q_form_volume(&v, &Field::constant(grid(), 1.0), 1.0).unwrap();
        assert!(q > 0.0);
        assert!((q - (v.volume_grad_norm2() + v.volume_l2_norm2())).abs() < 1e-12 * q);
    }

    #[test]
    fn norm_constants_for_flat_potential() {
        let c = NormEquivalence::from_potential(&Field::constant(grid(), 1.0), 1.0);
        assert_eq!(c.lower, 1.0);
        assert_eq!(c.upper, 1.0);
        let c = NormEquivalence::from_potential(&Field::constant(grid(), 3.0), 1.0);
        assert_eq!(c.lower, 1.0);
        assert_eq!(c.upper, 3.0);
        let c = NormEquivalence::from_potential(&Field::constant(grid(), 0.5), 1.0);
        assert_eq!(c.lower, 0.5);
    }
}
