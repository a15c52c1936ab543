//! Every numerical threshold used by the checks, in one place.
//!
//! Relative tolerances are applied as `tol * max(|reference|, ABS_FLOOR)`.

/// Absolute floor under relative tolerances.
pub const ABS_FLOOR: f64 = 1e-14;

/// Newton polish of Gauss nodes.
pub const GAUSS_NEWTON: f64 = 1e-15;

/// Equality cases (constants, Hölder/Jensen equality, exactly representable identities).
pub const EQUALITY: f64 = 1e-12;

/// Round trips through spectral analysis/synthesis.
pub const ROUND_TRIP: f64 = 1e-12;

/// Kelvin involution and pole-exchange identities.
pub const KELVIN: f64 = 1e-10;

/// Parseval and spectral-vs-pointwise energy agreement.
pub const PARSEVAL: f64 = 1e-10;

/// The v ≡ 1 kernel identity at off-origin points.
pub const GAMMA_IDENTITY: f64 = 1e-8;

/// Slack allowed in the sharp inequality suites, relative to |RHS|.
pub const INEQUALITY: f64 = 1e-10;

/// Residual of the integral equation at the bubble fixed point.
pub const IE_BUBBLE: f64 = 1e-6;

/// Residual of the integral equation on the trivial branch.
pub const IE_TRIVIAL: f64 = 1e-8;

/// Mass-balance identity on the trivial branch.
pub const MASS_BALANCE: f64 = 1e-8;

/// Pohozaev identity residual.
pub const POHOZAEV: f64 = 1e-6;

/// Required decay of the Pohozaev boundary term between the first and last radius.
pub const BOUNDARY_DECAY_FACTOR: f64 = 1e4;

/// Sup-relative deviation from a constant for a minimizer to count as constant.
pub const CONSTANCY: f64 = 1e-5;

/// Agreement of minimized quotient values with their closed form.
pub const QUOTIENT: f64 = 1e-6;

/// Invariance of the critical quotient along the dilation family.
pub const DILATION_INVARIANCE: f64 = 1e-6;

/// Analytic gradient against central differences.
pub const GRADIENT_FD: f64 = 1e-6;

/// Fitted growth/decay exponents versus their predicted values.
pub const TAIL_EXPONENT: f64 = 0.02;

/// Moving-plane positivity.
pub const MOVING_PLANE: f64 = 1e-10;

/// Antisymmetric double sum relative to its absolute mass.
pub const ANTISYMMETRY: f64 = 1e-8;

/// Pass predicate shared by all equality checks.
pub fn close(computed: f64, reference: f64, tol: f64) -> bool {
    (computed - reference).abs() <= tol * reference.abs().max(ABS_FLOOR)
}

/// `computed ≥ reference` up to a relative slack.
pub fn at_least(computed: f64, reference: f64, tol: f64) -> bool {
    computed >= reference - tol * reference.abs().max(ABS_FLOOR)
}

/// `computed ≤ reference` up to a relative slack.
pub fn at_most(computed: f64, reference: f64, tol: f64) -> bool {
    computed <= reference + tol * reference.abs().max(ABS_FLOOR)
}
