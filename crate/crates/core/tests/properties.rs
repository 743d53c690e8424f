//! Invariants of the energy, the Nehari projection and the grid maps.

use choquard_core::grid::{apply_multiplier, embed, l2_norm2, reflect_about, shift};
use choquard_core::nehari::project_to_nehari;
use choquard_core::problem::{LocalizedProfile, PeriodicProfile};
use choquard_core::random::{random_initial, rng, InitialFamily};
use choquard_core::{EnergyContext, Field, Grid, PotentialSpec, ProblemParams};
use proptest::prelude::*;

fn params(l: f64, n: usize) -> ProblemParams {
    ProblemParams {
        dim: 1,
        mass: 1.0,
        p: 2.0,
        q: 3.0,
        alpha: 0.5,
        half_period: l,
        points: n,
    }
}

fn context(gamma: f64) -> EnergyContext {
    let pot = PotentialSpec::new(
        PeriodicProfile::Cosine { value: 1.0, amplitude: 0.3 },
        LocalizedProfile::zero(),
        if gamma == 0.0 {
            PeriodicProfile::Zero
        } else {
            PeriodicProfile::Cosine { value: gamma, amplitude: 0.5 * gamma }
        },
    );
    EnergyContext::new(params(4.0, 64), pot).unwrap()
}

fn field(grid: &Grid, seed: u64) -> Field {
    random_initial(grid, &InitialFamily::default(), &mut rng(seed))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn d_is_homogeneous_of_degree_2p(seed in 0u64..1000, t in 0.1f64..5.0) {
        let ctx = context(0.0);
        let u = field(ctx.grid(), seed);
        let d = ctx.d_value(&u).unwrap();
        let dt = ctx.d_value(&u.scaled(t)).unwrap();
        prop_assert!(rel(dt, t.powf(4.0) * d) <= 1e-12);
    }

    #[test]
    fn energy_parts_are_invariant_under_integer_shifts(seed in 0u64..1000, z in -4i64..=4) {
        let ctx = context(0.5);
        let u = field(ctx.grid(), seed);
        let a = ctx.parts(&u).unwrap();
        let b = ctx.parts(&shift(&u, &[z]).unwrap()).unwrap();
        prop_assert!(rel(a.q, b.q) <= 1e-13);
        prop_assert!(rel(a.d, b.d) <= 1e-13);
        prop_assert!(rel(a.g, b.g) <= 1e-13);
    }

    #[test]
    fn projection_is_idempotent_and_scale_free(seed in 0u64..1000, t in 0.2f64..5.0, gamma in prop::sample::select(vec![0.0, 0.5])) {
        let ctx = context(gamma);
        let u = field(ctx.grid(), seed);
        let pu = project_to_nehari(&ctx, &u).unwrap();
        prop_assert!(ctx.nehari_residual(&pu.u_star).unwrap().abs() <= 1e-10 * pu.parts.q.max(1.0));
        let again = project_to_nehari(&ctx, &pu.u_star).unwrap();
        prop_assert!((again.t_star - 1.0).abs() <= 1e-8);
        let ptu = project_to_nehari(&ctx, &u.scaled(t)).unwrap();
        let gap = l2_norm2(&ptu.u_star.sub(&pu.u_star).unwrap()) / l2_norm2(&pu.u_star);
        prop_assert!(gap.sqrt() <= 1e-10);
        prop_assert!(rel(ptu.energy, pu.energy) <= 1e-10);
    }

    #[test]
    fn projected_energy_is_the_fiber_maximum(seed in 0u64..1000, s in prop::sample::select(vec![0.5, 0.9, 1.1, 2.0])) {
        let ctx = context(0.5);
        let u = field(ctx.grid(), seed);
        let pu = project_to_nehari(&ctx, &u).unwrap();
        let off = ctx.energy_value(&pu.u_star.scaled(s)).unwrap();
        prop_assert!(off < pu.energy);
    }

    #[test]
    fn reflection_is_an_involution_without_the_nyquist_mode(seed in 0u64..1000, c in -4.0f64..4.0) {
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let u = apply_multiplier(&field(&grid, seed), |k| if k == grid.points() / 2 { 0.0 } else { 1.0 });
        let back = reflect_about(&reflect_about(&u, &[c]).unwrap(), &[c]).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-12 * u.max_abs());
    }

    #[test]
    fn reflection_about_half_grid_points_is_a_permutation(seed in 0u64..1000, j in -64i64..64) {
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let u = field(&grid, seed);
        let c = j as f64 * grid.spacing() / 2.0;
        let r = reflect_about(&u, &[c]).unwrap();
        let n = grid.points() as i64;
        // With x_i = (i - n/2) h, the image 2c - x_i is node (j - i) mod n.
        for i in 0..n {
            let target = (j - i).rem_euclid(n) as usize;
            prop_assert!((r.values()[i as usize] - u.values()[target]).abs() <= 1e-12 * u.max_abs());
        }
    }

    #[test]
    fn embedding_then_cropping_restores_the_field(seed in 0u64..1000) {
        let small = Grid::new(1, 4.0, 64).unwrap();
        let large = Grid::new(1, 8.0, 128).unwrap();
        let u = field(&small, seed);
        let back = embed(&embed(&u, &large).unwrap(), &small).unwrap();
        prop_assert_eq!(back.values(), u.values());
        let big = embed(&u, &large).unwrap();
        prop_assert!((l2_norm2(&big) - l2_norm2(&u)).abs() <= 1e-12 * l2_norm2(&u));
    }
}
