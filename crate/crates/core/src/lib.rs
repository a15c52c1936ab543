//! Numerical verification toolkit for the GJMS operators `P^{2m}_n` on odd
//! spheres, their Q-curvatures, and the sharp (perturbed) Sobolev inequalities
//! they satisfy.
//!
//! Layout, bottom-up:
//!
//! * [`constants`] — exact rational constants (Q-curvature, eigenvalues, polynomial form).
//! * [`zonal`] — Gauss rules and Gegenbauer spectral calculus for axially symmetric functions.
//! * [`stereo`] — stereographic pullbacks, Kelvin transform, dilations and the kernel constant γ.
//! * [`radial_ie`] — the radial Riesz-type integral equation and its damped Picard solver.
//! * [`variational`] — minimization of the perturbed Sobolev quotient and parameter sweeps.
//! * [`diagnostics`] — Pohozaev, moving-plane and inequality-suite checks.
//! * [`report`] — check records shared with the CLI.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod radial_ie;
pub mod report;
pub mod stereo;
pub mod tolerances;
pub mod variational;
pub mod zonal;

pub use constants::{ExactRational, ProblemParams};
pub use error::{Error, Result};
pub use report::{CheckKind, CheckRecord};
pub use stereo::{RadialGrid, RadialProfile};
pub use zonal::{QuadratureRule, ZonalFunction};
