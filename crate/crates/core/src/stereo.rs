//! Stereographic projection between zonal functions on `S^n` and radial
//! functions on `R^n`.
//!
//! The polar angle θ is measured from the pole sent to the origin, so
//! `r = tan(θ/2)`, `t = cos θ = (1-r²)/(1+r²)` and the conformal factor is
//! `f = 2/(1+r²) = 1 + t`. A sphere function `v` pulls back to
//! `u = f^{-k/2} v` with `k = 2m - n`, which grows like `|x|^k`.
//!
//! Radial grids are the image of a sphere Gauss rule under `t ↦ r`, so plane
//! integrals of pulled-back quantities are sphere quadratures with no
//! truncation of `R^n`. Because Gauss nodes are symmetric, the reciprocal of a
//! grid is the same grid reversed and the Kelvin transform is exact on it.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::constants::{sphere_surface_area, ProblemParams};
use crate::error::{Error, Result};
use crate::radial_ie::radial_potential;
use crate::zonal::{gauss_legendre, QuadratureRule, ZonalFunction};

/// `2/(1+r²)`.
pub fn conformal_factor(r: f64) -> f64 {
    2.0 / (1.0 + r * r)
}

/// `t = cos θ` of the sphere point over radius `r`.
pub fn radius_to_t(r: f64) -> f64 {
    if r.is_infinite() {
        return -1.0;
    }
    (1.0 - r * r) / (1.0 + r * r)
}

/// `r = tan(θ/2)` for `t = cos θ`.
pub fn t_to_radius(t: f64) -> f64 {
    ((1.0 - t) / (1.0 + t)).sqrt()
}

/// The tan(θ/2) image of a sphere quadrature rule.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    rule: Arc<QuadratureRule>,
    radii: Vec<f64>,
    factor: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(rule: Arc<QuadratureRule>) -> Self {
        let npts = rule.len();
        let n = rule.dimension() as i32;
        let mut radii = Vec::with_capacity(npts);
        let mut factor = Vec::with_capacity(npts);
        let mut weights = Vec::with_capacity(npts);
        for i in 0..npts {
            let j = npts - 1 - i;
            let t = rule.nodes()[j];
            let f = 1.0 + t;
            radii.push(t_to_radius(t));
            factor.push(f);
            // dx = f^{-n} dμ
            weights.push(rule.shell_area() * rule.weights()[j] * f.powi(-n));
        }
        RadialGrid { rule, radii, factor, weights }
    }

    pub fn with_resolution(n: usize, npts: usize) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(QuadratureRule::shared(n, npts)?)))
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    pub fn dimension(&self) -> usize {
        self.rule.dimension()
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Radii in increasing order.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `f(r_i)`.
    pub fn factors(&self) -> &[f64] {
        &self.factor
    }

    /// Plane measure weights: `∫_{R^n} g(|x|) dx ≈ Σ_i W_i g(r_i)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sphere node index of radial index `i`.
    pub fn node_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, g)| w * g).sum()
    }

    /// Indices of the outermost 10% of nodes (at least three).
    pub fn tail_window(&self) -> std::ops::Range<usize> {
        let len = (self.len() / 10).max(3).min(self.len());
        self.len() - len..self.len()
    }
}

/// Least-squares fit of `log u = log A + p log r` on the tail window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    /// `A` with the exponent pinned to `2m - n`.
    pub coefficient: f64,
    /// Free-fitted exponent `p`.
    pub exponent: f64,
}

/// Log-log slope of grid values over the tail window.
pub fn tail_slope(grid: &RadialGrid, values: &[f64]) -> f64 {
    let w = grid.tail_window();
    let xs: Vec<f64> = grid.radii()[w.clone()].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values[w].iter().map(|v| v.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// A radial function on `R^n` sampled on a [`RadialGrid`], growing like
/// `A r^{2m-n}` at infinity.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    n: usize,
    m: usize,
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    tail: f64,
    /// `v = f^{k/2} u` analysed to full degree, for evaluation off the grid.
    sphere: ZonalFunction,
}

impl RadialProfile {
    pub fn new(m: usize, grid: Arc<RadialGrid>, values: Vec<f64>, tail: f64) -> Result<Self> {
        let n = grid.dimension();
        if 2 * m <= n {
            return Err(Error::InvalidParams(format!("need 2m > n, got n = {n}, m = {m}")));
        }
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("profile values must be finite".into()));
        }
        let k = (2 * m - n) as f64;
        let mut sphere_vals = vec![0.0; grid.len()];
        for (i, &u) in values.iter().enumerate() {
            sphere_vals[grid.node_index(i)] = u * grid.factors()[i].powf(k / 2.0);
        }
        let sphere = ZonalFunction::analyze_quiet(grid.rule(), &sphere_vals, grid.len() - 1)?;
        let profile = RadialProfile { n, m, grid, values, tail, sphere };
        let consistency = profile.tail_consistency();
        if consistency > 0.1 {
            log::debug!("tail coefficient {tail:e} disagrees with the last node by {consistency:.3}");
        }
        Ok(profile)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// `k = 2m - n`.
    pub fn growth_exponent(&self) -> f64 {
        (2 * self.m - self.n) as f64
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn radii(&self) -> &[f64] {
        self.grid.radii()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_coefficient(&self) -> f64 {
        self.tail
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The sphere function `v` with `u = f^{-k/2} v`.
    pub fn sphere_function(&self) -> &ZonalFunction {
        &self.sphere
    }

    /// `u(r)` for any `r ≥ 0` (including `r = ∞` is meaningless; use the tail).
    pub fn eval(&self, r: f64) -> f64 {
        let k = self.growth_exponent();
        conformal_factor(r).powf(-k / 2.0) * self.sphere.eval(radius_to_t(r))
    }

    /// `u'(r) = r f^{1-k/2} [(k/2) v - f v'(t)]`.
    pub fn eval_derivative(&self, r: f64) -> f64 {
        let k = self.growth_exponent();
        let f = conformal_factor(r);
        let t = radius_to_t(r);
        r * f.powf(1.0 - k / 2.0) * (0.5 * k * self.sphere.eval(t) - f * self.sphere.eval_derivative(t))
    }

    /// Derivatives at the grid radii.
    pub fn derivatives(&self) -> Vec<f64> {
        self.radii().iter().map(|&r| self.eval_derivative(r)).collect()
    }

    pub fn fit_tail(&self) -> TailFit {
        let w = self.grid.tail_window();
        let k = self.growth_exponent();
        let r = &self.radii()[w.clone()];
        let u = &self.values[w];
        let log_a = r.iter().zip(u).map(|(r, u)| u.ln() - k * r.ln()).sum::<f64>() / r.len() as f64;
        TailFit { coefficient: log_a.exp(), exponent: tail_slope(&self.grid, &self.values) }
    }

    /// `|u(r_last) / (A r_last^k) - 1|`.
    pub fn tail_consistency(&self) -> f64 {
        let i = self.grid.len() - 1;
        let r = self.radii()[i];
        (self.values[i] / (self.tail * r.powf(self.growth_exponent())) - 1.0).abs()
    }

    /// Growth certification: fitted exponent within `rel_tol` of `2m - n`.
    pub fn certify_growth(&self, rel_tol: f64) -> Result<TailFit> {
        let fit = self.fit_tail();
        let k = self.growth_exponent();
        if !((fit.exponent - k).abs() <= rel_tol * k) {
            return Err(Error::GrowthViolation { exponent: fit.exponent, expected: k });
        }
        Ok(fit)
    }

    /// Same grid, new values; the tail is refitted from the new values.
    pub fn with_values(&self, values: Vec<f64>, tail: Option<f64>) -> Result<Self> {
        let tail = match tail {
            Some(a) => a,
            None => {
                let p = RadialProfile::new(self.m, self.grid.clone(), values.clone(), 1.0)?;
                p.fit_tail().coefficient
            }
        };
        RadialProfile::new(self.m, self.grid.clone(), values, tail)
    }
}

/// `u = f^{(n-2m)/2} v` on the grid of `v`'s rule; the tail is `2^{-k/2} v(-1)`.
pub fn pullback_to_plane(v: &ZonalFunction, m: usize, grid: &Arc<RadialGrid>) -> Result<RadialProfile> {
    let rule = grid.rule();
    let vals = v.synthesize(rule)?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositive { min });
    }
    let n = grid.dimension();
    if 2 * m <= n {
        return Err(Error::InvalidParams(format!("need 2m > n, got n = {n}, m = {m}")));
    }
    let k = (2 * m - n) as f64;
    let u = (0..grid.len()).map(|i| grid.factors()[i].powf(-k / 2.0) * vals[grid.node_index(i)]).collect();
    let tail = 2f64.powf(-k / 2.0) * v.eval(-1.0);
    RadialProfile::new(m, grid.clone(), u, tail)
}

/// Pullback through the opposite pole, evaluated pointwise:
/// `u_S(x) = f(x)^{-k/2} v(π_S^{-1}(x))`, where `π_S^{-1}(x)` has `t = -(1-r²)/(1+r²)`.
pub fn pullback_through_opposite_pole(v: &ZonalFunction, m: usize, grid: &Arc<RadialGrid>) -> Result<Vec<f64>> {
    let n = grid.dimension();
    let k = (2 * m - n) as f64;
    Ok(grid.radii().iter().map(|&r| conformal_factor(r).powf(-k / 2.0) * v.eval(-radius_to_t(r))).collect())
}

/// Inverse of [`pullback_to_plane`]: analysis of `f^{k/2} u` to full degree.
pub fn pushforward_to_sphere(u: &RadialProfile) -> ZonalFunction {
    u.sphere_function().clone()
}

/// Same, truncated to `degree`.
pub fn pushforward_to_sphere_degree(u: &RadialProfile, degree: usize) -> Result<ZonalFunction> {
    let c = u.sphere_function().coeffs();
    if degree >= c.len() {
        return Err(Error::InvalidParams(format!("degree {degree} exceeds the profile resolution")));
    }
    ZonalFunction::new(u.dimension(), c[..=degree].to_vec())
}

/// `u*(x) = |x|^{2m-n} u(x/|x|²)`. On a symmetric grid `1/r_i = r_{N-1-i}`.
pub fn kelvin(u: &RadialProfile) -> Result<RadialProfile> {
    let k = u.growth_exponent();
    let npts = u.grid().len();
    let vals = (0..npts).map(|i| u.radii()[i].powf(k) * u.values()[npts - 1 - i]).collect();
    // the new tail is lim_{r→0} u(r) = 2^{-k/2} v(1)
    let tail = 2f64.powf(-k / 2.0) * u.sphere_function().eval(1.0);
    RadialProfile::new(u.order(), u.grid().clone(), vals, tail)
}

/// `F = ε f^{2m} u + f^{-c_α} u^{-α}`, the source term of the integral equation.
pub fn eval_f(u: &RadialProfile, params: &ProblemParams) -> Result<Vec<f64>> {
    check_profile_params(u, params)?;
    let min = u.min_value();
    if !(min > 0.0) {
        return Err(Error::NonPositive { min });
    }
    let c = params.c_alpha();
    Ok(u.values().iter().zip(u.grid().factors()).map(|(&ui, &f)| source_term(ui, f, params, c)).collect())
}

pub(crate) fn source_term(u: f64, f: f64, params: &ProblemParams, c_alpha: f64) -> f64 {
    params.eps * f.powi(2 * params.m as i32) * u + f.powf(-c_alpha) * u.powf(-params.alpha)
}

pub(crate) fn check_profile_params(u: &RadialProfile, params: &ProblemParams) -> Result<()> {
    if u.dimension() != params.n || u.order() != params.m {
        return Err(Error::InvalidParams(format!(
            "profile is for (n, m) = ({}, {}), params are ({}, {})",
            u.dimension(),
            u.order(),
            params.n,
            params.m
        )));
    }
    Ok(())
}

/// Checks `(1+|x|^k) F ≲ |x|^{-2n}`: the tail slope of `F` must be at most
/// `-(k + 2n)` up to the relative slack [`crate::tolerances::TAIL_EXPONENT`].
/// Returns the fitted slope.
pub fn check_source_decay(grid: &RadialGrid, source: &[f64], m: usize) -> Result<f64> {
    let n = grid.dimension() as f64;
    let k = 2.0 * m as f64 - n;
    let required = -(k + 2.0 * n);
    if source[grid.tail_window()].iter().all(|&x| x == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let slope = tail_slope(grid, source);
    if !(slope <= required * (1.0 - crate::tolerances::TAIL_EXPONENT)) {
        return Err(Error::DecayViolation { exponent: slope, required });
    }
    Ok(slope)
}

/// The conformal dilation `x ↦ δx` transported to the sphere:
/// `v_δ = f^{k/2} · δ^{-k/2} u(δ·)`, analysed to full degree on `rule`.
pub fn dilate(v: &ZonalFunction, delta: f64, m: usize, rule: &QuadratureRule) -> Result<ZonalFunction> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParams(format!("dilation factor must be positive, got {delta}")));
    }
    if delta < 0.05 {
        log::warn!("dilation δ = {delta} concentrates beyond what {} nodes resolve", rule.len());
    }
    let n = rule.dimension();
    let k = (2 * m) as f64 - n as f64;
    let d2 = delta * delta;
    let vals: Vec<f64> = rule
        .nodes()
        .iter()
        .map(|&t| {
            let (a, b) = (1.0 + t, 1.0 - t);
            // f(r)/f(δr) = (a + δ² b)/2 and t(δr) = (a - δ² b)/(a + δ² b)
            let s = a + d2 * b;
            (s / (2.0 * delta)).powf(k / 2.0) * v.eval((a - d2 * b) / s)
        })
        .collect();
    ZonalFunction::analyze_quiet(rule, &vals, rule.len() - 1)
}

/// `∫_{R^n} |y|^{2m-n} f(y)^{(n+2m)/2} dy` by Gauss–Legendre in `φ = 2 atan r`,
/// doubling the node count until two passes agree.
fn gamma_denominator(n: usize, m: usize, resolution: usize) -> Result<f64> {
    let k = (2 * m - n) as i32;
    let shell = sphere_surface_area(n - 1);
    let integrate = |npts: usize| -> Result<f64> {
        let (x, w) = gauss_legendre(npts)?;
        let half = std::f64::consts::FRAC_PI_2;
        Ok(x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let phi = half * (xi + 1.0);
                let r = (phi / 2.0).tan();
                let f = 2.0 * (phi / 2.0).cos().powi(2);
                // dr = dφ / f
                half * wi * r.powi(k + n as i32 - 1) * f.powf((n + 2 * m) as f64 / 2.0 - 1.0)
            })
            .sum::<f64>()
            * shell)
    };
    // the integrand is analytic in φ, so agreement between n and 2n nodes is the error estimate
    let mut npts = resolution;
    let mut prev = integrate(npts)?;
    for _ in 0..3 {
        npts *= 2;
        let next = integrate(npts)?;
        if (next - prev).abs() <= 1e-14 * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence { what: "γ quadrature refinement", iterations: 3, last: prev })
}

/// The kernel constant γ, defined by the `v ≡ 1` identity at the origin:
/// `2^{(n-2m)/2} = γ ∫ |y|^{2m-n} f(y)^{(n+2m)/2} dy`.
pub fn compute_gamma(n: usize, m: usize, resolution: usize) -> Result<f64> {
    crate::constants::q_curvature(n, m)?;
    if resolution < 64 {
        return Err(Error::InvalidParams(format!("resolution must be at least 64, got {resolution}")));
    }
    let k = (2 * m - n) as f64;
    Ok(2f64.powf(-k / 2.0) / gamma_denominator(n, m, resolution)?)
}

/// Beta-integral form of the same constant: `γ = 2^{1-2m} / (|S^{n-1}| B(m, n/2))`.
/// For odd `n`, `B(m, n/2) = (m-1)! / ∏_{j<m} (n/2 + j)` is rational.
pub fn gamma_beta_form(n: usize, m: usize) -> f64 {
    let mut beta = 1.0;
    for j in 0..m {
        beta *= (j.max(1)) as f64 / (n as f64 / 2.0 + j as f64);
    }
    2f64.powi(1 - 2 * m as i32) / (sphere_surface_area(n - 1) * beta)
}

/// The fundamental-solution normalization `γ / P(1)` implied by γ; informational only.
pub fn fundamental_constant(n: usize, m: usize, gamma: f64) -> f64 {
    gamma / crate::constants::gjms_eigenvalue(n, m, 0).to_f64()
}

/// One evaluation of the `v ≡ 1` identity at radius `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentitySample {
    pub r: f64,
    /// `f(r)^{(n-2m)/2}`.
    pub lhs: f64,
    /// `γ ∫ |x-y|^{2m-n} f(y)^{(n+2m)/2} dy`.
    pub rhs: f64,
}

impl IdentitySample {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs()
    }
}

/// The `v ≡ 1` identity at each radius, with split-panel quadrature of `resolution` nodes per panel.
pub fn gamma_identity(n: usize, m: usize, radii: &[f64], resolution: usize) -> Result<Vec<IdentitySample>> {
    let gamma = compute_gamma(n, m, resolution.max(64))?;
    let k = (2 * m - n) as i32;
    let (x, w) = gauss_legendre(resolution)?;
    let power = (n + 2 * m) as f64 / 2.0;
    radii
        .iter()
        .map(|&r| {
            let rhs = gamma * radial_potential(n, k, r, |s| conformal_factor(s).powf(power), &x, &w);
            Ok(IdentitySample { r, lhs: conformal_factor(r).powf(-(k as f64) / 2.0), rhs })
        })
        .collect()
}

/// CSV dump: `r,value` rows and a trailing `# tail_coefficient=` comment.
pub fn profile_csv(u: &RadialProfile) -> String {
    let mut out = String::from("r,value\n");
    for (r, v) in u.radii().iter().zip(u.values()) {
        writeln!(out, "{r:.16e},{v:.16e}").expect("write to String");
    }
    writeln!(out, "# tail_coefficient={:.16e}", u.tail_coefficient()).expect("write to String");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize, npts: usize) -> Arc<RadialGrid> {
        RadialGrid::with_resolution(n, npts).unwrap()
    }

    fn bubble(n: usize, m: usize, r: f64) -> f64 {
        ((1.0 + r * r) / 2.0).powf((2 * m - n) as f64 / 2.0)
    }

    #[test]
    fn conformal_factor_values() {
        assert_eq!(conformal_factor(0.0), 2.0);
        assert_eq!(conformal_factor(1.0), 1.0);
        assert!((conformal_factor(3.0) - 0.2).abs() < 1e-16);
    }

    #[test]
    fn grid_is_reciprocal_and_integrates_the_plane() {
        let g = grid(3, 64);
        let npts = g.len();
        for i in 0..npts {
            assert!((g.radii()[i] * g.radii()[npts - 1 - i] - 1.0).abs() < 1e-14);
        }
        assert!(g.radii().windows(2).all(|w| w[0] < w[1]));
        // ∫_{R³} f³ dx = |S³|
        let vals: Vec<f64> = g.factors().iter().map(|f| f.powi(3)).collect();
        assert!((g.integrate(&vals) - 2.0 * PI * PI).abs() < 1e-12);
        // ∫_{R³} (1+r²)^{-3} dx = π²/4
        let vals: Vec<f64> = g.radii().iter().map(|r| (1.0 + r * r).powi(-3)).collect();
        assert!((g.integrate(&vals) - PI * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn pullback_of_one_is_the_bubble() {
        let g = grid(3, 64);
        let u = pullback_to_plane(&ZonalFunction::constant(3, 1.0), 2, &g).unwrap();
        for (r, v) in u.radii().iter().zip(u.values()) {
            assert!((v - bubble(3, 2, *r)).abs() <= 1e-14 * v);
        }
        assert!((u.tail_coefficient() - 2f64.powf(-0.5)).abs() < 1e-15);
        assert!(u.tail_consistency() < 1e-3);
        let u3 = pullback_to_plane(&ZonalFunction::constant(3, 2.5), 3, &g).unwrap();
        for (r, v) in u3.radii().iter().zip(u3.values()) {
            assert!((v - 2.5 * bubble(3, 3, *r)).abs() <= 1e-13 * v);
        }
        assert!(pullback_to_plane(&ZonalFunction::new(3, vec![0.1, 1.0]).unwrap(), 2, &g).is_err());
    }

    #[test]
    fn off_grid_evaluation_and_derivative() {
        let g = grid(3, 64);
        let v = ZonalFunction::new(3, vec![1.0, 0.1, -0.05]).unwrap();
        let u = pullback_to_plane(&v, 2, &g).unwrap();
        for &r in &[0.0, 0.37, 1.0, 4.2, 30.0] {
            let exact = conformal_factor(r).powf(-0.5) * v.eval(radius_to_t(r));
            assert!((u.eval(r) - exact).abs() <= 1e-12 * exact);
            let h = 1e-6 * r.max(1.0);
            let fd = (u.eval(r + h) - u.eval((r - h).max(0.0))) / (r + h - (r - h).max(0.0));
            assert!((u.eval_derivative(r) - fd).abs() < 1e-6 * u.eval(r).max(1.0), "r={r}");
        }
    }

    #[test]
    fn bubble_is_kelvin_invariant() {
        for (n, m) in [(3, 2), (3, 3), (5, 3)] {
            let g = grid(n, 64);
            let u = pullback_to_plane(&ZonalFunction::constant(n, 1.0), m, &g).unwrap();
            let ku = kelvin(&u).unwrap();
            for (a, b) in u.values().iter().zip(ku.values()) {
                assert!((a - b).abs() <= tolerances::KELVIN * a);
            }
            assert!((ku.tail_coefficient() - u.tail_coefficient()).abs() < 1e-12);
        }
    }

    #[test]
    fn kelvin_matches_antipodal_pullback() {
        let g = grid(3, 64);
        let v = ZonalFunction::new(3, vec![1.0, 0.1]).unwrap(); // 1 + 0.2 cos θ
        let u = pullback_to_plane(&v, 2, &g).unwrap();
        let ku = kelvin(&u).unwrap();
        let south = pullback_through_opposite_pole(&v, 2, &g).unwrap();
        for (a, b) in ku.values().iter().zip(&south) {
            assert!((a - b).abs() <= tolerances::KELVIN * b.abs());
        }
        let reflected = pullback_to_plane(&v.reflected(), 2, &g).unwrap();
        for (a, b) in ku.values().iter().zip(reflected.values()) {
            assert!((a - b).abs() <= tolerances::KELVIN * b.abs());
        }
        assert!((ku.tail_coefficient() - 2f64.powf(-0.5) * 1.2).abs() < 1e-12);
    }

    #[test]
    fn source_term_on_the_bubble() {
        let g = grid(3, 64);
        let u = pullback_to_plane(&ZonalFunction::constant(3, 1.0), 2, &g).unwrap();
        let p = ProblemParams::new(3, 2, 7.0, 0.0).unwrap();
        let f = eval_f(&u, &p).unwrap();
        for (fi, r) in f.iter().zip(g.radii()) {
            let exact = conformal_factor(*r).powf(3.5);
            assert!((fi - exact).abs() <= 1e-13 * exact);
        }
        assert!(check_source_decay(&g, &f, 2).is_ok());
        // ε = 0.5, α = 3, u = c·bubble: F = f^{7/2}(0.5 c + c^{-3})
        let c = 1.3;
        let uc = pullback_to_plane(&ZonalFunction::constant(3, c), 2, &g).unwrap();
        let p = ProblemParams::new(3, 2, 3.0, 0.5).unwrap();
        let f = eval_f(&uc, &p).unwrap();
        for (fi, r) in f.iter().zip(g.radii()) {
            let fr = conformal_factor(*r);
            let exact = 0.5 * fr.powi(4) * c * fr.powf(-0.5) + fr.powf(2.0) * (c * fr.powf(-0.5)).powf(-3.0);
            assert!((fi - exact).abs() <= 1e-13 * exact);
            assert!((fi - fr.powf(3.5) * (0.5 * c + c.powi(-3))).abs() <= 1e-13 * exact);
        }
        // exponent arithmetic at the critical α: -c_α = 0
        assert_eq!(p.with_alpha(7.0).c_alpha(), 0.0);
        // slow decay is rejected
        let slow: Vec<f64> = g.radii().iter().map(|r| (1.0 + r * r).powf(-1.0)).collect();
        assert!(matches!(check_source_decay(&g, &slow, 2), Err(Error::DecayViolation { .. })));
    }

    #[test]
    fn gamma_matches_beta_form() {
        let g32 = compute_gamma(3, 2, 64).unwrap();
        assert!((g32 - 15.0 / (128.0 * PI)).abs() < 1e-15 * g32);
        let g33 = compute_gamma(3, 3, 64).unwrap();
        assert!((g33 - 105.0 / (2048.0 * PI)).abs() < 1e-15 * g33);
        for (n, m) in [(3, 2), (3, 3), (5, 3), (5, 4), (7, 4), (9, 6)] {
            let g = compute_gamma(n, m, 64).unwrap();
            assert!(g > 0.0);
            assert!((g - gamma_beta_form(n, m)).abs() < 1e-13 * g, "({n},{m})");
        }
        assert!(compute_gamma(4, 3, 64).is_err());
        assert!(compute_gamma(3, 2, 32).is_err());
    }

    #[test]
    fn gamma_identity_off_origin() {
        let radii: Vec<f64> = (0..20).map(|i| 10.0 * i as f64 / 19.0).collect();
        for (n, m) in [(3, 2), (3, 3), (5, 3)] {
            for s in gamma_identity(n, m, &radii, 128).unwrap() {
                assert!(
                    s.relative_error() < tolerances::GAMMA_IDENTITY,
                    "({n},{m}) r={} err={}",
                    s.r,
                    s.relative_error()
                );
            }
        }
    }

    #[test]
    fn dilation_examples() {
        let rule = QuadratureRule::new(3, 256).unwrap();
        let one = ZonalFunction::constant(3, 1.0);
        let same = dilate(&one, 1.0, 2, &rule).unwrap();
        assert!((same.coeffs()[0] - 1.0).abs() < 1e-14);
        assert!(same.coeffs()[1..].iter().all(|a| a.abs() < 1e-13));
        for delta in [0.5, 0.2, 0.1] {
            let v = dilate(&one, delta, 2, &rule).unwrap();
            // v_δ(1) = δ^{-1/2} is the maximum
            assert!((v.eval(1.0) - delta.powf(-0.5)).abs() < 1e-10 * delta.powf(-0.5));
            for &t in &[-0.9, -0.3, 0.2, 0.8] {
                let exact = (((1.0 + t) + delta * delta * (1.0 - t)) / (2.0 * delta)).sqrt();
                assert!((v.eval(t) - exact).abs() < 1e-10 * exact);
            }
        }
        assert!(dilate(&one, 0.0, 2, &rule).is_err());
    }

    #[test]
    fn csv_footer() {
        let g = grid(3, 8);
        let u = pullback_to_plane(&ZonalFunction::constant(3, 1.0), 2, &g).unwrap();
        let s = profile_csv(&u);
        assert!(s.starts_with("r,value\n"));
        assert!(s.trim_end().lines().last().unwrap().starts_with("# tail_coefficient=7.07106781186547"));
        assert_eq!(s.lines().count(), 10);
    }

    #[test]
    fn growth_certification() {
        let g = grid(3, 128);
        let u = pullback_to_plane(&ZonalFunction::constant(3, 1.0), 2, &g).unwrap();
        let fit = u.certify_growth(tolerances::TAIL_EXPONENT).unwrap();
        assert!((fit.coefficient - 2f64.powf(-0.5)).abs() < 0.01);
        let fat: Vec<f64> = u.values().iter().zip(u.radii()).map(|(v, r)| v * (1.0 + r * r).powf(0.5)).collect();
        let fat = u.with_values(fat, None).unwrap();
        assert!(matches!(fat.certify_growth(tolerances::TAIL_EXPONENT), Err(Error::GrowthViolation { .. })));
    }

    /// `1 + Σ c_ℓ C_ℓ / (ℓ+1)²`, positive for |c_ℓ| < 0.1 since C_ℓ(1) = ℓ+1 on S³.
    fn positive_from(c: Vec<f64>) -> ZonalFunction {
        let c = c.iter().enumerate().map(|(l, x)| x / ((l + 1) * (l + 1)) as f64).collect();
        ZonalFunction::new(3, c).unwrap().plus_constant(1.0)
    }

    proptest! {
        #[test]
        fn pull_push_round_trip(c in prop::collection::vec(-0.1f64..0.1, 1..20)) {
            let g = grid(3, 64);
            let v = positive_from(c);
            let u = pullback_to_plane(&v, 2, &g).unwrap();
            let back = pushforward_to_sphere(&u);
            for (l, a) in back.coeffs().iter().enumerate() {
                let b = v.coeffs().get(l).copied().unwrap_or(0.0);
                prop_assert!((a - b).abs() <= tolerances::ROUND_TRIP);
            }
        }

        #[test]
        fn kelvin_is_an_involution(c in prop::collection::vec(-0.1f64..0.1, 1..20), m in 2usize..4) {
            let g = grid(3, 64);
            let v = positive_from(c);
            let u = pullback_to_plane(&v, m, &g).unwrap();
            let kk = kelvin(&kelvin(&u).unwrap()).unwrap();
            for (a, b) in u.values().iter().zip(kk.values()) {
                prop_assert!((a - b).abs() <= tolerances::KELVIN * a.abs());
            }
            prop_assert!((kk.tail_coefficient() - u.tail_coefficient()).abs() <= 1e-12 * u.tail_coefficient());
        }
    }
}
