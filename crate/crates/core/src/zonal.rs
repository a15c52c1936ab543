//! Spectral calculus for zonal functions on `S^n`.
//!
//! A zonal function depends only on `t = cos θ` and expands in Gegenbauer
//! polynomials `C_ℓ^λ(t)`, `λ = (n-1)/2`, which are the zonal spherical
//! harmonics of `S^n`. The sphere measure reduces to
//! `dμ = |S^{n-1}| (1-t²)^{(n-2)/2} dt`, so one Gauss rule for that weight
//! handles every integral. Spectral operators (the GJMS operator, energies,
//! Parseval norms) act on coefficients; nonlinear powers are taken pointwise
//! on the Gauss grid.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::{gjms_eigenvalues_f64, sphere_surface_area};
use crate::error::{Error, Result};
use crate::tolerances;

/// Gauss rule for `∫_{-1}^{1} p(t)(1-t²)^{(n-2)/2} dt`, together with the
/// Gegenbauer basis tabulated at its nodes.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `basis[ℓ * N + j] = C_ℓ(t_j)` for `ℓ < N`.
    basis: Vec<f64>,
    norms: Vec<f64>,
    shell: f64,
}

impl QuadratureRule {
    /// Builds the `npts`-point rule on `S^n` (any `n ≥ 2`; `n = 2` is Gauss–Legendre).
    pub fn new(n: usize, npts: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("sphere dimension must be at least 2, got {n}")));
        }
        if npts < 4 {
            return Err(Error::InvalidParams(format!("need at least 4 nodes, got {npts}")));
        }
        let lambda = (n as f64 - 1.0) / 2.0;
        let mu0 = sphere_surface_area(n) / sphere_surface_area(n - 1);
        let (nodes, weights) = gauss_nodes(lambda, mu0, npts)?;

        let mut basis = vec![0.0; npts * npts];
        for (j, &t) in nodes.iter().enumerate() {
            for (l, c) in gegenbauer_values(lambda, npts - 1, t).into_iter().enumerate() {
                basis[l * npts + j] = c;
            }
        }
        Ok(QuadratureRule {
            n,
            nodes,
            weights,
            basis,
            norms: gegenbauer_norms(n, npts - 1),
            shell: sphere_surface_area(n - 1),
        })
    }

    /// Shared handle, convenient for profiles that keep a reference to their grid.
    pub fn shared(n: usize, npts: usize) -> Result<Arc<Self>> {
        Self::new(n, npts).map(Arc::new)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes `t_j = cos θ_j`, strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|S^{n-1}|`, the factor turning weight-integrals into sphere integrals.
    pub fn shell_area(&self) -> f64 {
        self.shell
    }

    /// `C_ℓ(t_j)`.
    pub fn basis(&self, ell: usize, j: usize) -> f64 {
        self.basis[ell * self.len() + j]
    }

    /// Row `ℓ` of the basis table.
    pub fn basis_row(&self, ell: usize) -> &[f64] {
        let n = self.len();
        &self.basis[ell * n..(ell + 1) * n]
    }

    /// `h_ℓ = ∫ C_ℓ² (1-t²)^{(n-2)/2} dt`.
    pub fn norm(&self, ell: usize) -> f64 {
        self.norms[ell]
    }

    /// `∫_{S^n} g dμ` for grid values `g_j`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.shell * self.weights.iter().zip(values).map(|(w, g)| w * g).sum::<f64>()
    }

    /// `∫_{S^n} h(g) dμ` without allocating.
    pub fn integrate_map(&self, values: &[f64], h: impl Fn(f64) -> f64) -> f64 {
        self.shell * self.weights.iter().zip(values).map(|(w, &g)| w * h(g)).sum::<f64>()
    }

    /// Sphere average `⨍ g dμ`.
    pub fn average(&self, values: &[f64]) -> f64 {
        self.integrate(values) / sphere_surface_area(self.n)
    }

    fn check_dim(&self, f: &ZonalFunction) -> Result<()> {
        if f.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: f.n });
        }
        Ok(())
    }
}

/// Gauss nodes and weights for the weight `(1-t²)^{λ-1/2}` with total mass `mu0`.
///
/// Golub–Welsch supplies starting values, Newton on the orthonormal
/// recurrence polishes them, and the weights are Christoffel numbers.
fn gauss_nodes(lambda: f64, mu0: f64, npts: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    // monic recurrence p_{k+1} = t p_k - β_k p_{k-1}
    let beta = |k: usize| -> f64 {
        let k = k as f64;
        k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0))
    };
    let b: Vec<f64> = (0..=npts).map(|k| if k == 0 { 0.0 } else { beta(k).sqrt() }).collect();

    let jacobi = DMatrix::from_fn(npts, npts, |i, j| {
        if i + 1 == j {
            b[j]
        } else if j + 1 == i {
            b[i]
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    guesses.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));

    // orthonormal values p_0..p_{N-1}, plus p_N and p_N'
    let eval = |t: f64| -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut p = 1.0 / mu0.sqrt();
        let mut d_prev = 0.0;
        let mut d = 0.0;
        let mut sumsq = p * p;
        for k in 0..npts {
            let p_next = (t * p - b[k] * p_prev) / b[k + 1];
            let d_next = (p + t * d - b[k] * d_prev) / b[k + 1];
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            if k + 1 < npts {
                sumsq += p * p;
            }
        }
        (p, d, sumsq)
    };

    let mut nodes = Vec::with_capacity(npts);
    let mut weights = Vec::with_capacity(npts);
    for &x0 in &guesses {
        let mut x = x0;
        let mut converged = false;
        for _ in 0..50 {
            let (p, d, _) = eval(x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= tolerances::GAUSS_NEWTON * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !x.is_finite() || x.abs() >= 1.0 {
            return Err(Error::NoConvergence { what: "Gauss node Newton polish", iterations: 50, last: x });
        }
        let (_, _, sumsq) = eval(x);
        nodes.push(x);
        weights.push(1.0 / sumsq);
    }

    // the weight is even: enforce exact antisymmetry of nodes
    for j in 0..npts / 2 {
        let k = npts - 1 - j;
        let t = 0.5 * (nodes[k] - nodes[j]);
        let w = 0.5 * (weights[k] + weights[j]);
        nodes[j] = -t;
        nodes[k] = t;
        weights[j] = w;
        weights[k] = w;
    }
    if npts % 2 == 1 {
        nodes[npts / 2] = 0.0;
    }
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::NoConvergence { what: "Gauss node ordering", iterations: 0, last: f64::NAN });
    }
    Ok((nodes, weights))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(npts: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_nodes(0.5, 2.0, npts)
}

/// Gauss rule for `∫_a^b g(x) dx`, mapped from Gauss–Legendre.
pub fn gauss_legendre_interval(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> Vec<(f64, f64)> {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    nodes.iter().zip(weights).map(|(&x, &w)| (mid + half * x, half * w)).collect()
}

/// `C_0^λ(t), …, C_lmax^λ(t)` by the three-term recurrence.
pub fn gegenbauer_values(lambda: f64, lmax: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax >= 1 {
        out.push(2.0 * lambda * t);
    }
    for l in 2..=lmax {
        let lf = l as f64;
        let v = (2.0 * t * (lf + lambda - 1.0) * out[l - 1] - (lf + 2.0 * lambda - 2.0) * out[l - 2]) / lf;
        out.push(v);
    }
    out
}

/// `C_ℓ^λ(1) = (2λ)_ℓ / ℓ!`.
pub fn gegenbauer_at_one(lambda: f64, ell: usize) -> f64 {
    (0..ell).fold(1.0, |acc, i| acc * (2.0 * lambda + i as f64) / (i as f64 + 1.0))
}

/// Weighted norms `h_0..h_lmax` of the Gegenbauer polynomials for `S^n`.
pub fn gegenbauer_norms(n: usize, lmax: usize) -> Vec<f64> {
    let lambda = (n as f64 - 1.0) / 2.0;
    let mut h = Vec::with_capacity(lmax + 1);
    h.push(sphere_surface_area(n) / sphere_surface_area(n - 1));
    for l in 1..=lmax {
        let lf = l as f64;
        let ratio = (lf + 2.0 * lambda - 1.0) / lf * (lf - 1.0 + lambda) / (lf + lambda);
        h.push(h[l - 1] * ratio);
    }
    h
}

/// `‖C_ℓ(cos θ)‖²_{L²(S^n)}`.
pub fn sphere_basis_norm_sq(n: usize, ell: usize) -> f64 {
    sphere_surface_area(n - 1) * gegenbauer_norms(n, ell)[ell]
}

/// A function on `S^n` of the polar angle only, as Gegenbauer coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalFunction {
    n: usize,
    coeffs: Vec<f64>,
}

impl ZonalFunction {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("sphere dimension must be at least 2, got {n}")));
        }
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("coefficients must be finite and non-empty".into()));
        }
        Ok(ZonalFunction { n, coeffs })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ZonalFunction { n, coeffs: vec![c] }
    }

    /// `scale · C_ℓ(cos θ)`.
    pub fn mode(n: usize, ell: usize, scale: f64) -> Self {
        let mut coeffs = vec![0.0; ell + 1];
        coeffs[ell] = scale;
        ZonalFunction { n, coeffs }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn lambda(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        gegenbauer_values(self.lambda(), self.degree(), t).iter().zip(&self.coeffs).map(|(c, a)| c * a).sum()
    }

    /// `d/dt`, using `C_ℓ^λ' = 2λ C_{ℓ-1}^{λ+1}`.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        if self.degree() == 0 {
            return 0.0;
        }
        let lam = self.lambda();
        let shifted = gegenbauer_values(lam + 1.0, self.degree() - 1, t);
        2.0 * lam * self.coeffs[1..].iter().zip(&shifted).map(|(a, c)| a * c).sum::<f64>()
    }

    /// Grid values at the nodes of `rule`.
    pub fn synthesize(&self, rule: &QuadratureRule) -> Result<Vec<f64>> {
        rule.check_dim(self)?;
        let npts = rule.len();
        if self.degree() >= npts {
            return Ok(rule.nodes().iter().map(|&t| self.eval(t)).collect());
        }
        let mut out = vec![0.0; npts];
        for (l, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(rule.basis_row(l)) {
                *o += a * c;
            }
        }
        Ok(out)
    }

    /// Projects grid values onto degrees `0..=degree`.
    pub fn analyze(rule: &QuadratureRule, values: &[f64], degree: usize) -> Result<Self> {
        if degree + 1 > rule.len() - rule.len() / 8 {
            log::warn!("analysis to degree {degree} with {} nodes is close to the aliasing limit", rule.len());
        }
        Self::analyze_quiet(rule, values, degree)
    }

    pub(crate) fn analyze_quiet(rule: &QuadratureRule, values: &[f64], degree: usize) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::InvalidParams(format!("expected {} grid values, got {}", rule.len(), values.len())));
        }
        if degree >= rule.len() {
            return Err(Error::InvalidParams(format!("degree {degree} exceeds the {}-node rule", rule.len())));
        }
        let wv: Vec<f64> = rule.weights().iter().zip(values).map(|(w, v)| w * v).collect();
        let coeffs = (0..=degree)
            .map(|l| rule.basis_row(l).iter().zip(&wv).map(|(c, x)| c * x).sum::<f64>() / rule.norm(l))
            .collect();
        ZonalFunction::new(rule.dimension(), coeffs)
    }

    /// Coefficient-wise multiplication by the GJMS eigenvalues.
    pub fn apply_gjms(&self, m: usize) -> ZonalFunction {
        let e = gjms_eigenvalues_f64(self.n, m, self.degree());
        ZonalFunction { n: self.n, coeffs: self.coeffs.iter().zip(&e).map(|(a, e)| a * e).collect() }
    }

    /// `∫ f P f dμ = Σ e_ℓ ‖C_ℓ‖² a_ℓ²`.
    pub fn energy(&self, m: usize) -> f64 {
        let e = gjms_eigenvalues_f64(self.n, m, self.degree());
        let h = gegenbauer_norms(self.n, self.degree());
        let shell = sphere_surface_area(self.n - 1);
        shell * self.coeffs.iter().zip(e.iter().zip(&h)).map(|(a, (e, h))| e * h * a * a).sum::<f64>()
    }

    /// `∫ f² dμ` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        let h = gegenbauer_norms(self.n, self.degree());
        sphere_surface_area(self.n - 1) * self.coeffs.iter().zip(&h).map(|(a, h)| h * a * a).sum::<f64>()
    }

    pub fn scaled(&self, c: f64) -> ZonalFunction {
        ZonalFunction { n: self.n, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn plus_constant(&self, c: f64) -> ZonalFunction {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        ZonalFunction { n: self.n, coeffs }
    }

    /// The antipodal image `t ↦ -t`.
    pub fn reflected(&self) -> ZonalFunction {
        let coeffs = self.coeffs.iter().enumerate().map(|(l, a)| if l % 2 == 1 { -a } else { *a }).collect();
        ZonalFunction { n: self.n, coeffs }
    }
}

fn needs_positivity(p: f64) -> bool {
    !(p >= 0.0 && p.fract() == 0.0)
}

fn positive_values(f: &ZonalFunction, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let v = f.synthesize(rule)?;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositive { min });
    }
    Ok(v)
}

/// `∫_{S^n} f^p dμ` by quadrature on the grid.
pub fn lebesgue_integral(f: &ZonalFunction, p: f64, rule: &QuadratureRule) -> Result<f64> {
    let v = if needs_positivity(p) { positive_values(f, rule)? } else { f.synthesize(rule)? };
    Ok(rule.integrate_map(&v, |x| x.powf(p)))
}

/// The ε-perturbed Sobolev quotient
/// `(∫ f^{1-α})^{2/(α-1)} ∫ [f P f - ε P(1) f²] dμ`.
pub fn sobolev_quotient(f: &ZonalFunction, params: &crate::ProblemParams, rule: &QuadratureRule) -> Result<f64> {
    if params.alpha == 1.0 {
        return Err(Error::AlphaIsOne);
    }
    if f.dimension() != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, got: f.dimension() });
    }
    let lower = lebesgue_integral(f, 1.0 - params.alpha, rule)?;
    let bilinear = f.energy(params.m) - params.eps * params.constant_eigenvalue() * f.l2_norm_sq();
    Ok(lower.powf(2.0 / (params.alpha - 1.0)) * bilinear)
}

/// `exp(-2 ⨍ log f) ⨍ f P f`, the α → 1 limit of the quotient.
pub fn log_sobolev_quotient(f: &ZonalFunction, m: usize, rule: &QuadratureRule) -> Result<f64> {
    let v = positive_values(f, rule)?;
    let area = sphere_surface_area(f.dimension());
    let mean_log = rule.integrate_map(&v, f64::ln) / area;
    Ok((-2.0 * mean_log).exp() * f.energy(m) / area)
}

/// `1 + g` with `g` a random zonal polynomial of degree `degree` whose sup-norm
/// is at most `amplitude`, so the result is bounded below by `1 - amplitude`.
///
/// Mode ℓ of `g` is `N(0,1)/(1+ℓ)` times `C_ℓ/C_ℓ(1)` before the global rescale.
pub fn random_positive_zonal(n: usize, seed: u64, degree: usize, amplitude: f64) -> Result<ZonalFunction> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidParams(format!("amplitude must lie in [0, 1), got {amplitude}")));
    }
    if n < 2 {
        return Err(Error::InvalidParams(format!("sphere dimension must be at least 2, got {n}")));
    }
    if amplitude == 0.0 || degree == 0 {
        return Ok(ZonalFunction::constant(n, 1.0));
    }
    let lambda = (n as f64 - 1.0) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; degree + 1];
    for (l, c) in coeffs.iter_mut().enumerate().skip(1) {
        let z: f64 = StandardNormal.sample(&mut rng);
        *c = z / (1.0 + l as f64) / gegenbauer_at_one(lambda, l);
    }
    let g = ZonalFunction { n, coeffs };

    // g(cos θ) is a cosine polynomial of degree L, so Bernstein's inequality
    // bounds its sup by the max over a uniform θ-grid of spacing h: sup ≤ max/(1 - L h/2).
    let samples = 8192usize.max(16 * degree);
    let h = std::f64::consts::PI / samples as f64;
    let grid_max = (0..=samples).map(|i| g.eval((i as f64 * h).cos()).abs()).fold(0.0, f64::max);
    let bound = grid_max / (1.0 - degree as f64 * h / 2.0);
    if bound == 0.0 {
        return Ok(ZonalFunction::constant(n, 1.0));
    }
    Ok(g.scaled(amplitude / bound).plus_constant(1.0))
}

/// CSV dump: `t,theta,value` at every node.
pub fn zonal_csv(f: &ZonalFunction, rule: &QuadratureRule) -> Result<String> {
    let v = f.synthesize(rule)?;
    let mut out = String::from("t,theta,value\n");
    for (t, x) in rule.nodes().iter().zip(&v) {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", t, t.acos(), x).expect("write to String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ProblemParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn weights_integrate_the_sphere() {
        for n in [2, 3, 5, 7, 9] {
            for npts in [4, 8, 33, 64, 128] {
                let rule = QuadratureRule::new(n, npts).unwrap();
                let total: f64 = rule.weights().iter().sum::<f64>() * rule.shell_area();
                assert!(rel(total, sphere_surface_area(n)) < 1e-12, "n={n} N={npts}");
                assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn even_moments_match_beta_integrals() {
        // ∫ t²(1-t²)^{1/2} dt = B(3/2,3/2) = π/8 ; ∫ t²(1-t²)^{3/2} dt = B(3/2,5/2) = π/16
        let r3 = QuadratureRule::new(3, 8).unwrap();
        let m3: f64 = r3.nodes().iter().zip(r3.weights()).map(|(t, w)| w * t * t).sum();
        assert!(rel(m3, PI / 8.0) < 1e-14);
        let r5 = QuadratureRule::new(5, 8).unwrap();
        let m5: f64 = r5.nodes().iter().zip(r5.weights()).map(|(t, w)| w * t * t).sum();
        assert!(rel(m5, PI / 16.0) < 1e-14);
        // degree 2N-1 = 15 exactness: ∫ t^14 (1-t²)^{3/2} = B(15/2, 5/2)
        let m14: f64 = r5.nodes().iter().zip(r5.weights()).map(|(t, w)| w * t.powi(14)).sum();
        // Γ(15/2)Γ(5/2)/Γ(10)
        let beta = PI * (135135.0 / 128.0) * 0.75 / 362880.0;
        assert!(rel(m14, beta) < 1e-13, "{m14} vs {beta}");
        for k in [1, 3, 5, 7] {
            let odd: f64 = r5.nodes().iter().zip(r5.weights()).map(|(t, w)| w * t.powi(k)).sum();
            assert!(odd.abs() < 1e-16);
        }
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(5).unwrap();
        assert!((x[4] - (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0).abs() < 1e-15);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn gegenbauer_closed_forms() {
        let t = 0.3;
        let c1 = gegenbauer_values(1.0, 3, t);
        assert!((c1[1] - 2.0 * t).abs() < 1e-15);
        assert!((c1[2] - (4.0 * t * t - 1.0)).abs() < 1e-15);
        assert!((c1[3] - (8.0 * t * t * t - 4.0 * t)).abs() < 1e-15);
        let c2 = gegenbauer_values(2.0, 2, t);
        assert!((c2[2] - (12.0 * t * t - 2.0)).abs() < 1e-15);
        assert_eq!(gegenbauer_at_one(1.0, 5), 6.0);
        assert_eq!(gegenbauer_at_one(2.0, 2), 10.0);
    }

    #[test]
    fn norms_match_quadrature() {
        let rule = QuadratureRule::new(5, 40).unwrap();
        for l in 0..20 {
            let q: f64 = (0..rule.len()).map(|j| rule.weights()[j] * rule.basis(l, j).powi(2)).sum();
            assert!(rel(q, rule.norm(l)) < 1e-13, "l={l}");
        }
    }

    #[test]
    fn synthesis_examples() {
        let rule = QuadratureRule::new(3, 16).unwrap();
        let ones = ZonalFunction::constant(3, 1.0).synthesize(&rule).unwrap();
        assert!(ones.iter().all(|&v| v == 1.0));
        let lin = ZonalFunction::mode(3, 1, 1.0).synthesize(&rule).unwrap();
        for (v, t) in lin.iter().zip(rule.nodes()) {
            assert!((v - 2.0 * t).abs() < 1e-15);
        }
        let back = ZonalFunction::analyze(&rule, &lin, 5).unwrap();
        assert!((back.coeffs()[1] - 1.0).abs() < 1e-14);
        assert!(back.coeffs().iter().enumerate().all(|(l, a)| l == 1 || a.abs() < 1e-14));
        let back = ZonalFunction::analyze(&rule, &ones, 5).unwrap();
        assert!((back.coeffs()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = ZonalFunction::new(5, vec![0.3, -0.2, 0.5, 0.1, -0.05]).unwrap();
        for &t in &[-0.9, -0.1, 0.4, 0.95] {
            let h = 1e-6;
            let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
            assert!((f.eval_derivative(t) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn gjms_on_constants_and_modes() {
        let one = ZonalFunction::constant(3, 1.0);
        assert_eq!(one.apply_gjms(2).coeffs(), &[-15.0 / 16.0]);
        assert_eq!(one.apply_gjms(3).coeffs(), &[315.0 / 64.0]);
        let lin = ZonalFunction::mode(3, 1, 1.0);
        assert_eq!(lin.apply_gjms(2).coeffs()[1], 105.0 / 16.0);
    }

    #[test]
    fn energy_examples() {
        let s3 = 2.0 * PI * PI;
        assert!(rel(ZonalFunction::constant(3, 1.0).energy(2), -15.0 / 16.0 * s3) < 1e-15);
        // cos θ = C_1/2 on S³, ‖cos θ‖² = 4π·π/8 = π²/2
        let cos = ZonalFunction::mode(3, 1, 0.5);
        assert!(rel(cos.l2_norm_sq(), PI * PI / 2.0) < 1e-15);
        assert!(rel(cos.energy(2), 105.0 * PI * PI / 32.0) < 1e-14);
    }

    #[test]
    fn lebesgue_examples() {
        let rule = QuadratureRule::new(3, 32).unwrap();
        let s3 = 2.0 * PI * PI;
        let c = ZonalFunction::constant(3, 1.7);
        assert!(rel(lebesgue_integral(&c, 2.5, &rule).unwrap(), 1.7f64.powf(2.5) * s3) < 1e-13);
        let one = ZonalFunction::constant(3, 1.0);
        assert!(rel(lebesgue_integral(&one, -6.0, &rule).unwrap(), s3) < 1e-13);
        // (1 + 0.1t)² integrates to |S³| + 0.01·π²/2
        let f = ZonalFunction::new(3, vec![1.0, 0.05]).unwrap();
        assert!(rel(lebesgue_integral(&f, 2.0, &rule).unwrap(), s3 + 0.01 * PI * PI / 2.0) < 1e-14);
        let neg = ZonalFunction::new(3, vec![0.1, 1.0]).unwrap();
        assert!(matches!(lebesgue_integral(&neg, -1.0, &rule), Err(Error::NonPositive { .. })));
        assert!(lebesgue_integral(&neg, 2.0, &rule).is_ok());
    }

    #[test]
    fn quotient_examples() {
        let rule = QuadratureRule::new(3, 64).unwrap();
        let s3: f64 = 2.0 * PI * PI;
        let p0 = ProblemParams::new(3, 2, 7.0, 0.0).unwrap();
        let sharp = -15.0 / 16.0 * s3.powf(4.0 / 3.0);
        let one = ZonalFunction::constant(3, 1.0);
        assert!(rel(sobolev_quotient(&one, &p0, &rule).unwrap(), sharp) < 1e-13);
        let five = ZonalFunction::constant(3, 5.0);
        assert!(rel(sobolev_quotient(&five, &p0, &rule).unwrap(), sharp) < 1e-13);
        let p1 = p0.with_eps(0.1);
        assert!(rel(sobolev_quotient(&one, &p1, &rule).unwrap(), 0.9 * sharp) < 1e-13);
        assert_eq!(sobolev_quotient(&one, &p0.with_alpha(1.0), &rule), Err(Error::AlphaIsOne));
    }

    #[test]
    fn log_sobolev_examples() {
        let rule = QuadratureRule::new(3, 64).unwrap();
        for c in [1.0, 0.3, 12.0] {
            let v = log_sobolev_quotient(&ZonalFunction::constant(3, c), 2, &rule).unwrap();
            assert!(rel(v, -15.0 / 16.0) < 1e-13);
        }
        let f = ZonalFunction::new(3, vec![1.0, 0.1]).unwrap();
        let v = log_sobolev_quotient(&f, 2, &rule).unwrap();
        // independent oracle: 4000-panel midpoint rule in θ
        let k = 4000;
        let (mut mlog, mut area) = (0.0, 0.0);
        for i in 0..k {
            let th = (i as f64 + 0.5) * PI / k as f64;
            let w = th.sin().powi(2);
            mlog += w * (1.0 + 0.2 * th.cos()).ln();
            area += w;
        }
        let oracle = (-2.0 * mlog / area).exp() * f.energy(2) / s3();
        assert!(rel(v, oracle) < 1e-9, "{v} vs {oracle}");
        assert!(v >= -15.0 / 16.0);
    }

    fn s3() -> f64 {
        2.0 * PI * PI
    }

    #[test]
    fn random_trials_are_positive_and_deterministic() {
        let rule = QuadratureRule::new(3, 64).unwrap();
        assert_eq!(random_positive_zonal(3, 9, 10, 0.0).unwrap(), ZonalFunction::constant(3, 1.0));
        let a = random_positive_zonal(3, 42, 12, 0.5).unwrap();
        let b = random_positive_zonal(3, 42, 12, 0.5).unwrap();
        assert_eq!(a, b);
        for seed in 0..1000u64 {
            let amp = 0.95;
            let f = random_positive_zonal(3, seed, 1 + (seed % 24) as usize, amp).unwrap();
            let min = f.synthesize(&rule).unwrap().into_iter().fold(f64::INFINITY, f64::min);
            assert!(min >= 1.0 - amp - 1e-15, "seed {seed}: {min}");
        }
    }

    #[test]
    fn csv_layout() {
        let rule = QuadratureRule::new(3, 4).unwrap();
        let s = zonal_csv(&ZonalFunction::constant(3, 2.0), &rule).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "t,theta,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with("2.0000000000000000e0"));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rule = QuadratureRule::new(5, 8).unwrap();
        assert!(matches!(
            ZonalFunction::constant(3, 1.0).synthesize(&rule),
            Err(Error::DimensionMismatch { expected: 5, got: 3 })
        ));
    }

    fn coeff_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 1..max_len)
    }

    proptest! {
        #[test]
        fn round_trip(coeffs in coeff_strategy(48), n in prop::sample::select(vec![3usize, 5, 7])) {
            let rule = QuadratureRule::new(n, 64).unwrap();
            let f = ZonalFunction::new(n, coeffs).unwrap();
            let v = f.synthesize(&rule).unwrap();
            let g = ZonalFunction::analyze_quiet(&rule, &v, f.degree()).unwrap();
            let scale = f.coeffs().iter().fold(1e-3f64, |a, c| a.max(c.abs()));
            for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
                prop_assert!((a - b).abs() <= tolerances::ROUND_TRIP * scale);
            }
        }

        #[test]
        fn parseval(coeffs in coeff_strategy(32), n in prop::sample::select(vec![3usize, 5])) {
            let rule = QuadratureRule::new(n, 64).unwrap();
            let f = ZonalFunction::new(n, coeffs).unwrap();
            let quad = lebesgue_integral(&f, 2.0, &rule).unwrap();
            let spectral = f.l2_norm_sq();
            prop_assert!((quad - spectral).abs() <= tolerances::PARSEVAL * spectral.max(1e-3));
        }

        #[test]
        fn spectral_energy_matches_pointwise(coeffs in coeff_strategy(32), m in 2usize..4) {
            let rule = QuadratureRule::new(3, 64).unwrap();
            let f = ZonalFunction::new(3, coeffs).unwrap();
            let pf = f.apply_gjms(m).synthesize(&rule).unwrap();
            let v = f.synthesize(&rule).unwrap();
            let prod: Vec<f64> = v.iter().zip(&pf).map(|(a, b)| a * b).collect();
            let pointwise = rule.integrate(&prod);
            let spectral = f.energy(m);
            let mass = rule.integrate_map(&prod, f64::abs).max(1e-3);
            prop_assert!((pointwise - spectral).abs() <= tolerances::PARSEVAL * mass);
        }

        #[test]
        fn energy_shift_identity(coeffs in coeff_strategy(16), c in -2.0f64..2.0) {
            let f = ZonalFunction::new(3, coeffs).unwrap();
            let e0 = -15.0 / 16.0;
            let expected = f.energy(2) + e0 * s3() * (c * c + 2.0 * c * f.coeffs()[0]);
            let got = f.plus_constant(c).energy(2);
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }

        #[test]
        fn quotient_scale_invariance(seed in 0u64..10_000, t in prop::sample::select(vec![0.1f64, 10.0])) {
            let rule = QuadratureRule::new(3, 64).unwrap();
            let f = random_positive_zonal(3, seed, 8, 0.6).unwrap();
            for alpha in [0.5, 3.0, 7.0] {
                let p = ProblemParams::new(3, 2, alpha, 0.2).unwrap();
                let a = sobolev_quotient(&f, &p, &rule).unwrap();
                let b = sobolev_quotient(&f.scaled(t), &p, &rule).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }

        #[test]
        fn quotient_above_sharp_constant(seed in 0u64..10_000, deg in 1usize..24) {
            let rule = QuadratureRule::new(3, 64).unwrap();
            let f = random_positive_zonal(3, seed, deg, 0.7).unwrap();
            for alpha in [0.5, 3.0, 7.0] {
                let p = ProblemParams::new(3, 2, alpha, 0.0).unwrap();
                let q = sobolev_quotient(&f, &p, &rule).unwrap();
                let sharp = crate::constants::sharp_constant(3, 2, alpha).unwrap();
                prop_assert!(q >= sharp - tolerances::INEQUALITY * sharp.abs());
            }
        }

        #[test]
        fn nonconstant_modes_carry_nonnegative_energy(coeffs in coeff_strategy(20)) {
            // without the ℓ = 0 component only positive eigenvalues contribute
            let mut c = coeffs;
            c[0] = 0.0;
            let f = ZonalFunction::new(3, c).unwrap();
            prop_assert!(f.energy(2) >= 0.0);
        }
    }
}
