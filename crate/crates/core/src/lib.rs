//! Ground states of the semirelativistic Choquard equation with a local
//! defocusing term,
//!
//! ```text
//! √(−Δ + m²) u − m u + V u = (I_α ∗ |u|^p) |u|^{p−2} u − Γ |u|^{q−2} u,
//! ```
//!
//! computed by minimizing the energy over its Nehari manifold on a periodic
//! box with a pseudospectral discretization.
//!
//! The crate is organized bottom-up: [`grid`] (periodic box, transforms,
//! integer shifts), [`problem`] (parameters and potentials), [`operators`]
//! (the square-root operator and the Riesz convolution), [`extension`] (the
//! half-space realization used as an oracle), [`energy`], [`nehari`] and
//! [`solver`].

// `!(x <= tol)` is written on purpose: a NaN must fail the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod energy;
pub mod error;
pub mod extension;
pub mod grid;
pub mod io;
pub mod nehari;
pub mod operators;
pub mod problem;
pub mod quadrature;
pub mod random;
pub mod solver;

pub use energy::{EnergyContext, EnergyReport};
pub use error::{CoreError, ProjectionError, Result};
pub use grid::{Field, Grid, SpectralField};
pub use problem::{PotentialSpec, ProblemParams};
