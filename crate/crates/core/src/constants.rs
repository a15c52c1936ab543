//! Closed-form constants of the round-sphere GJMS operator.
//!
//! On `S^n` the operator of order `2m` is a product of `m` shifted Laplacians,
//!
//! ```text
//! P = prod_{i=0}^{m-1} ( -Δ - (i + n/2)(i - n/2 + 1) ),
//! ```
//!
//! so it acts diagonally on spherical harmonics of degree `ℓ` with eigenvalue
//! obtained by substituting `ℓ(ℓ + n - 1)` for `-Δ`. Every constant here with a
//! half-integer Γ-ratio is kept as an exact rational; floating point only enters
//! through `|S^n|`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        ExactRational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_integer(v: i64) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactRational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    /// Evaluates the polynomial with these coefficients (ascending powers) at `x`.
    pub fn horner(coeffs: &[ExactRational], x: &ExactRational) -> ExactRational {
        coeffs.iter().rev().fold(ExactRational::zero(), |acc, c| &(&acc * x) + c)
    }
}

impl From<BigRational> for ExactRational {
    fn from(r: BigRational) -> Self {
        ExactRational(r)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl std::str::FromStr for ExactRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("not a rational: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(ExactRational(BigRational::new(p, q)))
            }
            None => {
                let p: BigInt = s.parse().map_err(|_| bad())?;
                Ok(ExactRational(BigRational::from_integer(p)))
            }
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<&ExactRational> for &ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &ExactRational) -> ExactRational {
                ExactRational(std::ops::$trait::$method(&self.0, &rhs.0))
            }
        }
        impl std::ops::$trait for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(std::ops::$trait::$method(self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl std::ops::Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

/// The tuple `(n, m, α, ε)` describing one instance of the perturbed equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub eps: f64,
}

impl ProblemParams {
    /// Strict constructor: `n` odd and at least 3, `2m > n`,
    /// `0 < α ≤ (n+2m)/(2m-n)` and `0 ≤ ε < 1`.
    pub fn new(n: usize, m: usize, alpha: f64, eps: f64) -> Result<Self> {
        check_dims(n, m)?;
        let p = ProblemParams { n, m, alpha, eps };
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        if alpha > p.critical_alpha() * (1.0 + 1e-15) {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} exceeds the critical exponent {}",
                p.critical_alpha()
            )));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParams(format!("eps must lie in [0, 1), got {eps}")));
        }
        Ok(p)
    }

    /// No range checks at all; for exploratory sweeps outside the proven range.
    pub fn unchecked(n: usize, m: usize, alpha: f64, eps: f64) -> Self {
        ProblemParams { n, m, alpha, eps }
    }

    /// Additional restriction used by the Liouville sweep: at `ε = 0` the
    /// critical exponent is conformally invariant and must be excluded.
    pub fn validate_for_liouville(&self) -> Result<()> {
        ProblemParams::new(self.n, self.m, self.alpha, self.eps)?;
        if self.eps == 0.0 && self.is_critical() {
            return Err(Error::InvalidParams("eps = 0 requires alpha strictly below the critical exponent".into()));
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        ProblemParams { alpha, ..self }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        ProblemParams { eps, ..self }
    }

    /// `2m - n`, the growth exponent of pulled-back functions at infinity.
    pub fn order_gap(&self) -> i32 {
        2 * self.m as i32 - self.n as i32
    }

    /// `(n + 2m) / (2m - n)`.
    pub fn critical_alpha(&self) -> f64 {
        (self.n + 2 * self.m) as f64 / self.order_gap() as f64
    }

    pub fn is_critical(&self) -> bool {
        (self.alpha - self.critical_alpha()).abs() <= 1e-12 * self.critical_alpha()
    }

    pub fn c_alpha(&self) -> f64 {
        c_alpha(self.n, self.m, self.alpha)
    }

    /// `P(1) = (n-2m)/2 · Q`, as a float.
    pub fn constant_eigenvalue(&self) -> f64 {
        gjms_eigenvalue(self.n, self.m, 0).to_f64()
    }

    /// The trivial solution `(1-ε)^{-1/(α+1)}` of the perturbed equation.
    pub fn trivial_solution(&self) -> f64 {
        (1.0 - self.eps).powf(-1.0 / (self.alpha + 1.0))
    }

    /// Closed-form value of the perturbed infimum, attained by constants:
    /// `(1-ε) P(1) |S^n|^{(α+1)/(α-1)}`.
    pub fn predicted_infimum(&self) -> f64 {
        (1.0 - self.eps)
            * self.constant_eigenvalue()
            * sphere_surface_area(self.n).powf((self.alpha + 1.0) / (self.alpha - 1.0))
    }
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidParams(format!("n must be odd and at least 3, got {n}")));
    }
    if 2 * m <= n {
        return Err(Error::InvalidParams(format!("need 2m > n, got n = {n}, m = {m}")));
    }
    Ok(())
}

/// `(i + n/2)(i - n/2 + 1)`, the shift of the `i`-th Laplacian factor.
fn factor_shift(n: usize, i: usize) -> ExactRational {
    let n = n as i64;
    let i = i as i64;
    ExactRational::new((2 * i + n) * (2 * i - n + 2), 4)
}

/// `Γ(n/2 + m) / Γ(n/2 - m)` as the finite product `∏_{j=0}^{2m-1} (n/2 - m + j)`.
pub fn gamma_ratio(n: usize, m: usize) -> ExactRational {
    let (n, m) = (n as i64, m as i64);
    (0..2 * m).fold(ExactRational::one(), |acc, j| &acc * &ExactRational::new(n - 2 * m + 2 * j, 2))
}

/// Q-curvature `(2/(n-2m)) Γ(n/2+m)/Γ(n/2-m)` of the round sphere.
pub fn q_curvature(n: usize, m: usize) -> Result<ExactRational> {
    check_dims(n, m)?;
    let factor = ExactRational::new(2, n as i64 - 2 * m as i64);
    Ok(&factor * &gamma_ratio(n, m))
}

/// Eigenvalue of the GJMS operator on degree-`ell` spherical harmonics.
///
/// Panics on an invalid `(n, m)` pair; use [`q_curvature`] to validate first.
pub fn gjms_eigenvalue(n: usize, m: usize, ell: usize) -> ExactRational {
    let lambda = ExactRational::from_integer((ell * (ell + n - 1)) as i64);
    (0..m).fold(ExactRational::one(), |acc, i| &acc * &(&lambda - &factor_shift(n, i)))
}

/// Float eigenvalues `e_0, …, e_lmax`.
pub fn gjms_eigenvalues_f64(n: usize, m: usize, lmax: usize) -> Vec<f64> {
    (0..=lmax).map(|l| gjms_eigenvalue(n, m, l).to_f64()).collect()
}

/// Coefficients of `P` as a polynomial in `-Δ`, ascending powers `0..=m`.
pub fn expand_gjms_polynomial(n: usize, m: usize) -> Result<Vec<ExactRational>> {
    check_dims(n, m)?;
    let mut poly = vec![ExactRational::one()];
    for i in 0..m {
        let shift = factor_shift(n, i);
        // multiply by (x - shift)
        let mut next = vec![ExactRational::zero(); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k + 1] = &next[k + 1] + c;
            next[k] = &next[k] - &(c * &shift);
        }
        poly = next;
    }
    Ok(poly)
}

/// Renders the expansion in powers of `Δ` (rather than `-Δ`), highest power first.
pub fn format_in_laplacian(coeffs: &[ExactRational]) -> String {
    let mut out = String::new();
    for (k, c) in coeffs.iter().enumerate().rev() {
        let c = if k % 2 == 1 { -c.clone() } else { c.clone() };
        if c == ExactRational::zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = if neg { -c } else { c };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let unit = mag == ExactRational::one();
        match k {
            0 => out.push_str(&mag.to_string()),
            1 if unit => out.push('Δ'),
            1 => out.push_str(&format!("({mag})Δ")),
            _ if unit => out.push_str(&format!("Δ^{k}")),
            _ => out.push_str(&format!("({mag})Δ^{k}")),
        }
    }
    out
}

/// `α(2m-n)/2 - (2m+n)/2`; non-positive for admissible `α`.
pub fn c_alpha(n: usize, m: usize, alpha: f64) -> f64 {
    let k = 2.0 * m as f64 - n as f64;
    alpha * k / 2.0 - (2.0 * m as f64 + n as f64) / 2.0
}

/// Exact version of [`c_alpha`] for rational exponents.
pub fn c_alpha_exact(n: usize, m: usize, alpha: &ExactRational) -> ExactRational {
    let k = ExactRational::from_integer(2 * m as i64 - n as i64);
    let s = ExactRational::from_integer(2 * m as i64 + n as i64);
    let two = ExactRational::from_integer(2);
    &(&(alpha * &k) - &s) / &two
}

/// `Γ(n/2+m)/Γ(n/2-m) · |S^n|^{(α+1)/(α-1)}`, the sharp constant of the
/// subcritical/critical Sobolev inequality when `n = 2m - 1`.
pub fn sharp_constant(n: usize, m: usize, alpha: f64) -> Result<f64> {
    check_dims(n, m)?;
    if n + 1 != 2 * m {
        return Err(Error::InvalidParams(format!("sharp constant requires n = 2m - 1, got n = {n}, m = {m}")));
    }
    if alpha == 1.0 {
        return Err(Error::AlphaIsOne);
    }
    if !(alpha > 0.0) || alpha > (2 * n + 1) as f64 {
        return Err(Error::InvalidParams(format!("alpha must lie in (0,1) ∪ (1, {}], got {alpha}", 2 * n + 1)));
    }
    Ok(sharp_exponent_form(n, m, alpha))
}

fn sharp_exponent_form(n: usize, m: usize, alpha: f64) -> f64 {
    gamma_ratio(n, m).to_f64() * sphere_surface_area(n).powf((alpha + 1.0) / (alpha - 1.0))
}

/// Surface area `2π^{(n+1)/2}/Γ((n+1)/2)` of the unit sphere `S^n ⊂ R^{n+1}`.
pub fn sphere_surface_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^n| = 2π/(n-1) |S^{n-2}|
    let (mut area, start) = if n % 2 == 0 { (2.0, 0) } else { (2.0 * PI, 1) };
    let mut k = start;
    while k < n {
        k += 2;
        area *= 2.0 * PI / (k - 1) as f64;
    }
    area
}
