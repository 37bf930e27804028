//! Numerical laboratory for pointwise gradient regularity of degenerate and
//! singular quasilinear elliptic equations.
//!
//! The crate solves equations of p-Laplacian type
//! `-div(ς(X) |Du|^{p-2} Du) = μ` on 2D rectangular grids, and measures how
//! fast the solution decays around points where the gradient vanishes. At
//! such critical points the gradient enjoys a far better modulus of
//! continuity than the coefficients alone would suggest; the probe machinery
//! in [`probe`] quantifies that gain as a fitted decay exponent and compares
//! it against the expected pointwise target `min{α_M, (q-n)/((p-1)q)}`.
//!
//! Module map:
//! - [`grid`]: uniform 2D grids, grid-sampled fields, the text field format,
//!   and discrete gradients.
//! - [`problem`]: structural constants of the equation and solver settings.
//! - [`solver`]: variational finite-difference solver with ε-regularized
//!   Newton continuation, plus the exactly-integrable 1D solver.
//! - [`continuity`]: moduli of continuity, Dini admissibility integrals, and
//!   sampled verification of the structural growth/ellipticity/oscillation
//!   bounds.
//! - [`probe`]: singular-set detection, dyadic oscillation profiles, exponent
//!   fits, and the scaling normalization of a field around a critical point.
//! - [`oracles`]: closed-form solutions used to calibrate the solver and to
//!   make exponent claims checkable.

pub mod continuity;
pub mod error;
pub mod grid;
pub mod oracles;
pub mod probe;
pub mod problem;
pub mod quad;
pub mod solver;

pub use error::Error;
pub use grid::{Grid2D, ScalarField, VectorField};
pub use problem::{ModelField, ProblemSpec, SolveConfig};
