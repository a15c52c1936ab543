//! The radial integral equation
//!
//! ```text
//! u(x) = γ ∫_{R^n} |x-y|^{2m-n} F_{ε,u}(y) dy,
//! F_{ε,u} = ε f^{2m} u + f^{-c_α} u^{-α},
//! ```
//!
//! restricted to radial `u` and solved by damped Picard iteration on the
//! stereographic grid. For radial data the kernel reduces to its spherical
//! mean `M(r,s)`, the average of `|x-y|^k` over `|y| = s` with `|x| = r`.
//!
//! `M(r,·)` has a kink at `s = r`, which limits plain Gauss quadrature to a few
//! digits of algebraic convergence. The discrete operator therefore uses
//! singularity subtraction against the bubble source `B = f^{(n+2m)/2}`, whose
//! potential is computed separately with panels split at the kink.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::constants::{sphere_surface_area, ProblemParams};
use crate::error::{Error, Result};
use crate::stereo::{
    check_profile_params, check_source_decay, compute_gamma, conformal_factor, eval_f, RadialGrid, RadialProfile,
};
use crate::zonal::{gauss_legendre, gauss_legendre_interval, gegenbauer_values, QuadratureRule};

type Rule = Arc<(Vec<f64>, Vec<f64>, f64)>;

/// 24-point Gauss rule for the weight `(1-t²)^{(n-3)/2}`, with its total mass.
fn angular_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("angular rule cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let rule = QuadratureRule::new(n - 1, 24).expect("24-point rule always builds");
            let mass = sphere_surface_area(n - 1) / sphere_surface_area(n - 2);
            Arc::new((rule.nodes().to_vec(), rule.weights().to_vec(), mass))
        })
        .clone()
}

/// Average of `|x-y|^k` over the sphere `|y| = s` in `R^n`, for `|x| = r`.
///
/// `k` may be any odd integer with `k > 1 - n` (negative values are used by
/// the Pohozaev double sum). For `n = 3` this is
/// `[(r+s)^{k+2} - |r-s|^{k+2}] / (2rs(k+2))`.
pub fn kernel_spherical_mean(n: usize, k: i32, r: f64, s: f64) -> f64 {
    let kh = k as f64 / 2.0;
    if s == 0.0 {
        return r.powi(k);
    }
    if r == 0.0 {
        return s.powi(k);
    }
    let a_sum = r * r + s * s;
    let b = 2.0 * r * s;
    if b / a_sum < 0.5 {
        // well separated: the integrand is analytic well beyond [-1, 1]
        let rule = angular_rule(n);
        let (t, w, mass) = (&rule.0, &rule.1, rule.2);
        return t.iter().zip(w).map(|(&t, &w)| w * (a_sum - b * t).powf(kh)).sum::<f64>() / mass;
    }
    // q = r² + s² - 2rst runs over [a, c] = [(r-s)², (r+s)²] and
    // (1-t²)^p dt = (q-a)^p (c-q)^p dq / B^{2p+1}, with p = (n-3)/2 an integer.
    let p = (n - 3) / 2;
    let lo = (r - s) * (r - s);
    let hi = (r + s) * (r + s);
    // coefficients of (q - lo)^p (hi - q)^p in powers of q
    let mut poly = vec![1.0];
    for _ in 0..p {
        let mut next = vec![0.0; poly.len() + 1];
        for (j, c) in poly.iter().enumerate() {
            next[j + 1] += c;
            next[j] -= c * lo;
        }
        poly = next;
    }
    for _ in 0..p {
        let mut next = vec![0.0; poly.len() + 1];
        for (j, c) in poly.iter().enumerate() {
            next[j + 1] -= c;
            next[j] += c * hi;
        }
        poly = next;
    }
    let integral: f64 = poly
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let e = j as f64 + kh + 1.0;
            let low = if lo == 0.0 { 0.0 } else { lo.powf(e) };
            c * (hi.powf(e) - low) / e
        })
        .sum();
    let mass = sphere_surface_area(n - 1) / sphere_surface_area(n - 2);
    integral / (mass * b.powi(2 * p as i32 + 1))
}

/// `∫_{R^n} |x-y|^k g(|y|) dy` at `|x| = r`, by Gauss–Legendre in `φ = 2 atan s`
/// on the two panels separated by the kink at `s = r`.
pub fn radial_potential(n: usize, k: i32, r: f64, g: impl Fn(f64) -> f64, x: &[f64], w: &[f64]) -> f64 {
    let shell = sphere_surface_area(n - 1);
    let split = 2.0 * r.atan();
    let mut panels = Vec::with_capacity(2);
    if split > 0.0 {
        panels.push((0.0, split));
    }
    panels.push((split, std::f64::consts::PI));
    let mut total = 0.0;
    for (a, b) in panels {
        for (phi, wt) in gauss_legendre_interval(x, w, a, b) {
            let s = (phi / 2.0).tan();
            // ds = dφ / f(s)
            total += wt * kernel_spherical_mean(n, k, r, s) * s.powi(n as i32 - 1) * g(s) / conformal_factor(s);
        }
    }
    shell * total
}

/// How the kink of the kernel at `s = r` is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KinkTreatment {
    /// Raw Gauss weights.
    Plain,
    /// Subtract the bubble source and add back its accurately computed potential.
    #[default]
    SingularitySubtraction,
}

/// Dense discretization of `F ↦ γ ∫ |x-y|^k F(y) dy` on a radial grid.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    grid: Arc<RadialGrid>,
    m: usize,
    gamma: f64,
    matrix: Vec<f64>,
    diagonal: Vec<f64>,
    moment: Vec<f64>,
}

/// Weights `ω` with `Σ ω_i F_i = ∫ F dx` whenever `F / f^{(n+2m)/2}` is a polynomial of
/// degree `< N` in `t`.
///
/// On the sphere `∫ F dx` carries the factor `(1+t)^{k/2}`, which has a half-integer
/// singularity at the south pole and defeats plain Gauss weights. Its moments against
/// `C_ℓ` are smooth in `θ` (`(1+cos θ)^{k/2} = 2^{k/2} cos^k(θ/2)`), so they are
/// computed in that variable and folded back into nodal weights.
fn moment_weights(grid: &RadialGrid, m: usize) -> Result<Vec<f64>> {
    let rule = grid.rule();
    let n = grid.dimension();
    let npts = grid.len();
    let k = (2 * m - n) as i32;
    let lambda = (n as f64 - 1.0) / 2.0;
    let (x, w) = gauss_legendre(2 * npts + 64)?;
    let mut mu = vec![0.0; npts];
    for (th, wt) in gauss_legendre_interval(&x, &w, 0.0, std::f64::consts::PI) {
        let g = wt * 2f64.powf(k as f64 / 2.0) * (th / 2.0).cos().powi(k) * th.sin().powi(n as i32 - 1);
        for (acc, c) in mu.iter_mut().zip(gegenbauer_values(lambda, npts - 1, th.cos())) {
            *acc += g * c;
        }
    }
    let power = (n + 2 * m) as f64 / 2.0;
    Ok((0..npts)
        .map(|i| {
            let j = grid.node_index(i);
            let kappa: f64 = (0..npts).map(|l| rule.basis(l, j) * mu[l] / rule.norm(l)).sum();
            rule.shell_area() * rule.weights()[j] * kappa / grid.factors()[i].powf(power)
        })
        .collect())
}

impl KernelOperator {
    pub fn new(grid: Arc<RadialGrid>, m: usize, treatment: KinkTreatment) -> Result<Self> {
        let n = grid.dimension();
        let gamma = compute_gamma(n, m, 128)?;
        let k = (2 * m - n) as i32;
        let npts = grid.len();
        let radii = grid.radii().to_vec();
        let weights = grid.weights().to_vec();
        let matrix: Vec<f64> = (0..npts * npts)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / npts, idx % npts);
                gamma * kernel_spherical_mean(n, k, radii[i], radii[j]) * weights[j]
            })
            .collect();
        let diagonal = match treatment {
            KinkTreatment::Plain => vec![0.0; npts],
            KinkTreatment::SingularitySubtraction => {
                let power = (n + 2 * m) as f64 / 2.0;
                let bubble: Vec<f64> = grid.factors().iter().map(|f| f.powf(power)).collect();
                let (x, w) = gauss_legendre(npts.max(64))?;
                (0..npts)
                    .into_par_iter()
                    .map(|i| {
                        let exact =
                            gamma * radial_potential(n, k, radii[i], |s| conformal_factor(s).powf(power), &x, &w);
                        let row = &matrix[i * npts..(i + 1) * npts];
                        let approx: f64 = row.iter().zip(&bubble).map(|(a, b)| a * b).sum();
                        (exact - approx) / bubble[i]
                    })
                    .collect()
            }
        };
        let moment = moment_weights(&grid, m)?;
        Ok(KernelOperator { grid, m, gamma, matrix, diagonal, moment })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `γ K[F]` at the grid radii.
    pub fn apply(&self, source: &[f64]) -> Vec<f64> {
        let npts = self.grid.len();
        (0..npts)
            .map(|i| {
                let row = &self.matrix[i * npts..(i + 1) * npts];
                row.iter().zip(source).map(|(a, b)| a * b).sum::<f64>() + self.diagonal[i] * source[i]
            })
            .collect()
    }

    /// `γ ∫ F dx`, the coefficient of `r^k` in `γ K[F]` as `r → ∞`.
    pub fn tail_moment(&self, source: &[f64]) -> f64 {
        self.gamma * self.moment.iter().zip(source).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Applies the operator to the source of `u`.
    pub fn image(&self, u: &RadialProfile, params: &ProblemParams) -> Result<RadialProfile> {
        let source = eval_f(u, params)?;
        let vals = self.apply(&source);
        RadialProfile::new(self.m, self.grid.clone(), vals, self.tail_moment(&source))
    }
}

/// `γ K[F]` as a profile, after checking the decay hypothesis on `F`.
pub fn apply_newtonian_kernel(source: &[f64], grid: &Arc<RadialGrid>, params: &ProblemParams) -> Result<RadialProfile> {
    if source.len() != grid.len() {
        return Err(Error::InvalidParams(format!("expected {} source values, got {}", grid.len(), source.len())));
    }
    check_source_decay(grid, source, params.m)?;
    let op = KernelOperator::new(grid.clone(), params.m, KinkTreatment::default())?;
    let vals = op.apply(source);
    RadialProfile::new(params.m, grid.clone(), vals, op.tail_moment(source))
}

fn sup_relative(u: &[f64], image: &[f64]) -> f64 {
    let num = u.iter().zip(image).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let den = u.iter().map(|a| a.abs()).fold(0.0, f64::max);
    num / den
}

/// `‖u - γK[F_{ε,u}]‖_∞ / ‖u‖_∞` on the grid, with a prebuilt operator.
pub fn ie_residual_with(op: &KernelOperator, u: &RadialProfile, params: &ProblemParams) -> Result<f64> {
    check_profile_params(u, params)?;
    let image = op.apply(&eval_f(u, params)?);
    Ok(sup_relative(u.values(), &image))
}

/// `‖u - γK[F_{ε,u}]‖_∞ / ‖u‖_∞` on the grid of `u`.
pub fn ie_residual(u: &RadialProfile, params: &ProblemParams) -> Result<f64> {
    let op = KernelOperator::new(u.grid().clone(), params.m, KinkTreatment::default())?;
    ie_residual_with(&op, u, params)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub damping: f64,
    pub min_damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// A step is accepted only if it shrinks the residual by at least this factor,
    /// otherwise the damping is halved.
    pub max_ratio: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { damping: 0.5, min_damping: 1.0 / 64.0, tol: 1e-11, max_iter: 2000, max_ratio: 0.9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub damping: f64,
}

#[derive(Clone, Debug)]
pub struct PicardSolution {
    pub profile: RadialProfile,
    pub trace: Vec<TraceRow>,
    pub residual: f64,
}

/// Damped Picard iteration `u ← (1-τ)u + τ γK[F_{ε,u}]`.
///
/// Steps that fail to shrink the residual (or lose positivity) are rejected
/// and τ is halved, down to `min_damping`, where steps are taken regardless.
pub fn solve_picard(params: &ProblemParams, initial: &RadialProfile, opts: &PicardOptions) -> Result<PicardSolution> {
    check_profile_params(initial, params)?;
    if !initial.is_positive() {
        return Err(Error::NonPositive { min: initial.min_value() });
    }
    if opts.tol.is_infinite() {
        return Ok(PicardSolution { profile: initial.clone(), trace: Vec::new(), residual: f64::NAN });
    }
    let op = KernelOperator::new(initial.grid().clone(), params.m, KinkTreatment::default())?;
    solve_picard_with(&op, params, initial, opts)
}

/// [`solve_picard`] with a prebuilt operator.
pub fn solve_picard_with(
    op: &KernelOperator,
    params: &ProblemParams,
    initial: &RadialProfile,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    check_profile_params(initial, params)?;
    if opts.tol.is_infinite() {
        return Ok(PicardSolution { profile: initial.clone(), trace: Vec::new(), residual: f64::NAN });
    }
    let mut tau = opts.damping.clamp(opts.min_damping, 1.0);
    let mut u = initial.values().to_vec();
    let grid = initial.grid().clone();
    let map = |u: &[f64]| -> Result<(Vec<f64>, f64)> {
        let p = RadialProfile::new(params.m, grid.clone(), u.to_vec(), 1.0)?;
        let source = eval_f(&p, params)?;
        Ok((op.apply(&source), op.tail_moment(&source)))
    };
    let (mut image, mut tail) = map(&u)?;
    let mut residual = sup_relative(&u, &image);
    let mut trace = vec![TraceRow { iter: 0, residual, damping: tau }];

    let mut iter = 0;
    while residual > opts.tol && iter < opts.max_iter {
        iter += 1;
        let candidate: Vec<f64> = u.iter().zip(&image).map(|(a, b)| (1.0 - tau) * a + tau * b).collect();
        let at_floor = tau <= opts.min_damping;
        if candidate.iter().any(|&x| !(x > 0.0)) {
            if at_floor {
                let min = candidate.iter().copied().fold(f64::INFINITY, f64::min);
                return Err(Error::NonPositive { min });
            }
            tau = (tau / 2.0).max(opts.min_damping);
            continue;
        }
        let (cand_image, cand_tail) = map(&candidate)?;
        let cand_res = sup_relative(&candidate, &cand_image);
        if cand_res > opts.max_ratio * residual && !at_floor {
            tau = (tau / 2.0).max(opts.min_damping);
            trace.push(TraceRow { iter, residual, damping: tau });
            continue;
        }
        u = candidate;
        image = cand_image;
        tail = cand_tail;
        residual = cand_res;
        trace.push(TraceRow { iter, residual, damping: tau });
    }
    if residual > opts.tol {
        return Err(Error::PicardNonConvergence { iterations: iter, residual });
    }
    let profile = RadialProfile::new(params.m, grid, u, tail)?;
    Ok(PicardSolution { profile, trace, residual })
}

/// Convergence trace CSV: `iter,residual,damping`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iter,residual,damping\n");
    for row in trace {
        writeln!(out, "{},{:.16e},{:.16e}", row.iter, row.residual, row.damping).expect("write to String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stereo::{kelvin, pullback_to_plane, pushforward_to_sphere};
    use crate::tolerances;
    use crate::zonal::ZonalFunction;

    /// Midpoint rule in the angle on a fine mesh, split at the kink — slow but independent.
    fn mean_oracle(n: usize, k: i32, r: f64, s: f64) -> f64 {
        let steps = 200_000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..steps {
            let th = (i as f64 + 0.5) * std::f64::consts::PI / steps as f64;
            let w = th.sin().powi(n as i32 - 2);
            let d2 = r * r + s * s - 2.0 * r * s * th.cos();
            num += w * d2.powf(k as f64 / 2.0);
            den += w;
        }
        num / den
    }

    #[test]
    fn spherical_mean_examples() {
        assert!((kernel_spherical_mean(3, 1, 1.0, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert!((kernel_spherical_mean(3, 3, 2.0, 1.0) - 12.1).abs() < 1e-13);
        for n in [3, 5, 7] {
            assert_eq!(kernel_spherical_mean(n, 1, 2.5, 0.0), 2.5);
            assert_eq!(kernel_spherical_mean(n, 3, 0.0, 1.5), 1.5f64.powi(3));
        }
    }

    #[test]
    fn spherical_mean_against_angular_oracle() {
        for n in [3, 5, 7] {
            for k in [1, 3, -1] {
                for (r, s) in [(1.0, 1.0), (0.3, 2.0), (2.0, 1.9), (0.01, 5.0), (7.0, 0.7)] {
                    let got = kernel_spherical_mean(n, k, r, s);
                    let oracle = mean_oracle(n, k, r, s);
                    assert!((got - oracle).abs() < 1e-7 * oracle, "n={n} k={k} r={r} s={s}: {got} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn spherical_mean_branches_agree() {
        // ρ = 2rs/(r²+s²) = 0.5 is the switch point; both sides must join continuously
        for n in [3, 5, 9] {
            for k in [1, 3, 5] {
                let s = 2.0 - 3f64.sqrt(); // ρ(1, s) = 0.5 exactly
                let below = kernel_spherical_mean(n, k, 1.0, s * (1.0 - 1e-14));
                let above = kernel_spherical_mean(n, k, 1.0, s * (1.0 + 1e-14));
                assert!((below - above).abs() < 1e-12 * above, "n={n} k={k} {below} {above}");
            }
        }
    }

    #[test]
    fn newton_potential_is_the_reciprocal_max() {
        for (r, s) in [(1.0, 3.0), (2.0, 0.5), (1.0, 1.0)] {
            assert!((kernel_spherical_mean(3, -1, r, s) - 1.0 / f64::max(r, s)).abs() < 1e-15);
        }
    }

    fn bubble_profile(n: usize, m: usize, npts: usize, scale: f64) -> RadialProfile {
        let g = RadialGrid::with_resolution(n, npts).unwrap();
        pullback_to_plane(&ZonalFunction::constant(n, scale), m, &g).unwrap()
    }

    #[test]
    fn kernel_reproduces_the_bubble() {
        for (n, m) in [(3, 2), (3, 3), (5, 3)] {
            let u = bubble_profile(n, m, 128, 1.0);
            let p = ProblemParams::new(n, m, (n + 2 * m) as f64 / (2 * m - n) as f64, 0.0).unwrap();
            let source = eval_f(&u, &p).unwrap();
            let out = apply_newtonian_kernel(&source, u.grid(), &p).unwrap();
            let err = sup_relative(u.values(), out.values());
            assert!(err < 1e-8, "({n},{m}): {err}");
            assert!((out.tail_coefficient() - u.tail_coefficient()).abs() < 1e-10 * u.tail_coefficient());
        }
    }

    #[test]
    fn kink_treatment_accuracy() {
        // Measured once to choose the default: plain Gauss weights stall at a
        // few digits, subtraction reaches roundoff. Both are pinned loosely here.
        let u = bubble_profile(3, 2, 128, 1.0);
        let p = ProblemParams::new(3, 2, 3.0, 0.0).unwrap();
        let source = eval_f(&u, &p).unwrap();
        let plain = KernelOperator::new(u.grid().clone(), 2, KinkTreatment::Plain).unwrap();
        let fixed = KernelOperator::new(u.grid().clone(), 2, KinkTreatment::SingularitySubtraction).unwrap();
        let e_plain = sup_relative(u.values(), &plain.apply(&source));
        let e_fixed = sup_relative(u.values(), &fixed.apply(&source));
        assert!(e_fixed < 1e-12, "{e_fixed}");
        assert!(e_plain > 100.0 * e_fixed, "{e_plain} vs {e_fixed}");
        // a non-bubble source: subtraction still beats plain against a split-panel oracle
        let v = ZonalFunction::new(3, vec![1.0, 0.2, 0.05]).unwrap();
        let w = pullback_to_plane(&v, 2, u.grid()).unwrap();
        let src = eval_f(&w, &p).unwrap();
        let (x, wt) = gauss_legendre(256).unwrap();
        let src_fn = |s: f64| {
            let uu = w.eval(s);
            let f = conformal_factor(s);
            f.powf(2.0) * uu.powi(-3)
        };
        let oracle: Vec<f64> =
            u.radii().iter().map(|&r| fixed.gamma() * radial_potential(3, 1, r, src_fn, &x, &wt)).collect();
        let e_plain = sup_relative(&oracle, &plain.apply(&src));
        let e_fixed = sup_relative(&oracle, &fixed.apply(&src));
        assert!(e_fixed < e_plain, "{e_fixed} vs {e_plain}");
        assert!(e_fixed < 1e-10, "{e_fixed}");
    }

    #[test]
    fn kernel_is_linear_and_vanishes_on_zero() {
        let u = bubble_profile(3, 2, 64, 1.0);
        let p = ProblemParams::new(3, 2, 7.0, 0.0).unwrap();
        let zero = vec![0.0; 64];
        let out = apply_newtonian_kernel(&zero, u.grid(), &p).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
        let source = eval_f(&u, &p).unwrap();
        let twice: Vec<f64> = source.iter().map(|x| 2.0 * x).collect();
        let a = apply_newtonian_kernel(&source, u.grid(), &p).unwrap();
        let b = apply_newtonian_kernel(&twice, u.grid(), &p).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((2.0 * x - y).abs() <= 1e-14 * y.abs());
        }
    }

    #[test]
    fn kernel_commutes_with_kelvin() {
        // with F̃(y) = |y|^{-2n} F(y/|y|²) one has K[F̃] = Kelvin(K[F])
        let u = bubble_profile(3, 2, 128, 1.0);
        let p = ProblemParams::new(3, 2, 3.0, 0.1).unwrap();
        let v = ZonalFunction::new(3, vec![1.0, 0.15, -0.03]).unwrap();
        let w = pullback_to_plane(&v, 2, u.grid()).unwrap();
        let src = eval_f(&w, &p).unwrap();
        let npts = src.len();
        let reflected: Vec<f64> = (0..npts).map(|i| u.radii()[i].powi(-7) * src[npts - 1 - i]).collect();
        let op = KernelOperator::new(u.grid().clone(), 2, KinkTreatment::default()).unwrap();
        let direct = RadialProfile::new(2, u.grid().clone(), op.apply(&src), op.tail_moment(&src)).unwrap();
        let lhs = op.apply(&reflected);
        let rhs = kelvin(&direct).unwrap();
        let err = sup_relative(rhs.values(), &lhs);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn picard_recovers_the_bubble() {
        let p = ProblemParams::new(3, 2, 7.0, 0.0).unwrap();
        let init = bubble_profile(3, 2, 128, 1.3);
        let sol = solve_picard(&p, &init, &PicardOptions::default()).unwrap();
        let exact = bubble_profile(3, 2, 128, 1.0);
        let err = sup_relative(exact.values(), sol.profile.values());
        assert!(err < 1e-6, "{err}");
        assert!(sol.residual < tolerances::IE_BUBBLE);
        assert!(ie_residual(&sol.profile, &p).unwrap() < tolerances::IE_BUBBLE);
    }

    #[test]
    fn picard_recovers_the_trivial_branch() {
        let p = ProblemParams::new(3, 2, 3.0, 0.3).unwrap();
        let init = bubble_profile(3, 2, 128, 1.0);
        let sol = solve_picard(&p, &init, &PicardOptions::default()).unwrap();
        let v = pushforward_to_sphere(&sol.profile);
        let c = p.trivial_solution();
        assert!((v.coeffs()[0] - c).abs() < 1e-9 * c);
        assert!(v.coeffs()[1..].iter().all(|a| a.abs() < 1e-9));
        assert!(sol.residual < tolerances::IE_TRIVIAL);
        assert!(sol.trace.windows(2).all(|w| w[1].residual <= w[0].residual));
        let exact = bubble_profile(3, 2, 128, c);
        assert!(ie_residual(&exact, &p).unwrap() < tolerances::IE_TRIVIAL);
    }

    #[test]
    fn residual_detects_perturbation() {
        let p = ProblemParams::new(3, 2, 7.0, 0.0).unwrap();
        let u = bubble_profile(3, 2, 128, 1.0);
        assert!(ie_residual(&u, &p).unwrap() < 1e-8);
        let bumped = u.with_values(u.values().iter().map(|x| 1.1 * x).collect(), None).unwrap();
        assert!(ie_residual(&bumped, &p).unwrap() > 1e-3);
    }

    #[test]
    fn infinite_tolerance_returns_initial() {
        let p = ProblemParams::new(3, 2, 3.0, 0.1).unwrap();
        let init = bubble_profile(3, 2, 32, 2.0);
        let opts = PicardOptions { tol: f64::INFINITY, ..Default::default() };
        let sol = solve_picard(&p, &init, &opts).unwrap();
        assert_eq!(sol.profile.values(), init.values());
        assert!(sol.trace.is_empty());
    }

    #[test]
    fn trace_csv_layout() {
        let s = trace_csv(&[TraceRow { iter: 0, residual: 0.5, damping: 0.25 }]);
        assert_eq!(s, "iter,residual,damping\n0,5.0000000000000000e-1,2.5000000000000000e-1\n");
    }
}
