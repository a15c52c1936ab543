//! Minimization of the ε-perturbed Sobolev quotient
//!
//! ```text
//! J(φ) = (∫ φ^{1-α})^{2/(α-1)} ∫ [φ Pφ - ε P(1) φ²] dμ
//! ```
//!
//! over positive zonal `φ = exp(ψ)`, `ψ` a Gegenbauer polynomial of degree `L`.
//! The discrete functional takes `φ` at the Gauss nodes, integrates powers
//! pointwise and evaluates the quadratic form on the interpolating polynomial
//! of degree `N-1`, so it equals [`sobolev_quotient`] of that interpolant.
//!
//! Minimizers solve `Pv - ε P(1) v = S v^{-α}` with a Lagrange multiplier `S`;
//! a constant rescaling turns them into solutions of the unperturbed-form
//! equation `Pv = P(1)(εv + v^{-α})`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{gjms_eigenvalues_f64, sphere_surface_area, ProblemParams};
use crate::error::{Error, Result};
use crate::stereo::dilate;
use crate::tolerances;
use crate::zonal::{random_positive_zonal, sobolev_quotient, QuadratureRule, ZonalFunction};

/// The quotient as a function of the Gegenbauer coefficients `b` of `ψ = log φ`.
#[derive(Clone, Debug)]
pub struct LogQuotient {
    params: ProblemParams,
    rule: Arc<QuadratureRule>,
    degree: usize,
    /// `e_ℓ - ε e_0` for `ℓ < N`.
    shifted: Vec<f64>,
    /// Diagonal scaling of the gradient, the Hessian magnitude at constants.
    precond: Vec<f64>,
}

/// Value, gradient in `b`, and the grid values of `φ`.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub phi: Vec<f64>,
}

impl LogQuotient {
    pub fn new(params: &ProblemParams, rule: Arc<QuadratureRule>, degree: usize) -> Result<Self> {
        if params.alpha == 1.0 {
            return Err(Error::AlphaIsOne);
        }
        if rule.dimension() != params.n {
            return Err(Error::DimensionMismatch { expected: params.n, got: rule.dimension() });
        }
        if degree + 1 > rule.len() {
            return Err(Error::InvalidParams(format!("degree {degree} needs more than {} nodes", rule.len())));
        }
        let npts = rule.len();
        let e = gjms_eigenvalues_f64(params.n, params.m, npts - 1);
        let e0 = e[0];
        let shifted: Vec<f64> = e.iter().map(|x| x - params.eps * e0).collect();
        let area = sphere_surface_area(params.n);
        let scale = 2.0 * rule.shell_area() * area.powf(2.0 / (params.alpha - 1.0));
        let precond =
            (0..=degree).map(|l| scale * rule.norm(l) * (e[l].abs() + (1.0 + params.alpha) * e0.abs())).collect();
        Ok(LogQuotient { params: *params, rule, degree, shifted, precond })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    pub fn preconditioner(&self) -> &[f64] {
        &self.precond
    }

    fn phi(&self, b: &[f64]) -> Vec<f64> {
        let mut psi = vec![0.0; self.rule.len()];
        for (l, &c) in b.iter().enumerate() {
            for (p, x) in psi.iter_mut().zip(self.rule.basis_row(l)) {
                *p += c * x;
            }
        }
        psi.iter().map(|p| p.exp()).collect()
    }

    /// `(∫φ^{1-α}, Σ_j w_j φ_j C_ℓ(t_j), quadratic form)`.
    fn parts(&self, phi: &[f64]) -> (f64, Vec<f64>, f64) {
        let rule = &self.rule;
        let power = rule.integrate_map(phi, |x| x.powf(1.0 - self.params.alpha));
        let wphi: Vec<f64> = rule.weights().iter().zip(phi).map(|(w, p)| w * p).collect();
        let proj: Vec<f64> =
            (0..rule.len()).map(|l| rule.basis_row(l).iter().zip(&wphi).map(|(c, x)| c * x).sum()).collect();
        let form = rule.shell_area()
            * proj.iter().enumerate().map(|(l, c)| self.shifted[l] * c * c / rule.norm(l)).sum::<f64>();
        (power, proj, form)
    }

    fn check(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.degree + 1 {
            return Err(Error::DimensionMismatch { expected: self.degree + 1, got: b.len() });
        }
        Ok(())
    }

    pub fn value(&self, b: &[f64]) -> Result<f64> {
        self.check(b)?;
        let phi = self.phi(b);
        let (power, _, form) = self.parts(&phi);
        Ok(power.powf(2.0 / (self.params.alpha - 1.0)) * form)
    }

    pub fn evaluate(&self, b: &[f64]) -> Result<Evaluation> {
        self.check(b)?;
        let rule = &self.rule;
        let alpha = self.params.alpha;
        let phi = self.phi(b);
        let (power, proj, form) = self.parts(&phi);
        let p = 2.0 / (alpha - 1.0);
        let ip = power.powf(p);
        let value = ip * form;

        // dJ/dφ_j = -2 I^{p-1} |S^{n-1}| w_j φ_j^{-α} E + I^p 2|S^{n-1}| w_j Σ_ℓ (e_ℓ - εe_0)(c_ℓ/h_ℓ) C_ℓ(t_j)
        let scaled: Vec<f64> = (0..rule.len()).map(|l| self.shifted[l] * proj[l] / rule.norm(l)).collect();
        let mut dform = vec![0.0; rule.len()];
        for (l, s) in scaled.iter().enumerate() {
            for (d, c) in dform.iter_mut().zip(rule.basis_row(l)) {
                *d += s * c;
            }
        }
        let shell = rule.shell_area();
        let dphi: Vec<f64> = (0..rule.len())
            .map(|j| {
                let w = rule.weights()[j] * shell;
                let d = -2.0 * ip / power * w * phi[j].powf(-alpha) * form + ip * 2.0 * w * dform[j];
                d * phi[j]
            })
            .collect();
        let gradient =
            (0..=self.degree).map(|l| rule.basis_row(l).iter().zip(&dphi).map(|(c, d)| c * d).sum()).collect();
        Ok(Evaluation { value, gradient, phi })
    }

    /// Coefficients of `log φ₀` to degree `L`.
    pub fn coordinates_of(&self, phi0: &ZonalFunction) -> Result<Vec<f64>> {
        let vals = phi0.synthesize(&self.rule)?;
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NonPositive { min });
        }
        let logs: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        Ok(ZonalFunction::analyze(&self.rule, &logs, self.degree)?.coeffs().to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DescentOptions {
    /// Stop once `sup |∇J| ≤ grad_tol · |J|`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    pub max_step: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { grad_tol: 1e-9, max_iter: 5000, armijo: 1e-4, max_halvings: 60, max_step: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DescentRow {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct Minimization {
    /// Normalized so that `∫ v^{1-α} dμ = 1`.
    pub minimizer: ZonalFunction,
    /// Grid values of the normalized minimizer.
    pub values: Vec<f64>,
    pub value: f64,
    pub status: DescentStatus,
    pub trace: Vec<DescentRow>,
}

impl Minimization {
    pub fn converged(&self) -> bool {
        self.status == DescentStatus::Converged
    }

    /// `sup |v / ⨍v - 1|` on the grid.
    pub fn constancy(&self, rule: &QuadratureRule) -> f64 {
        constancy(&self.values, rule)
    }
}

/// `sup |v / ⨍v - 1|` over grid values.
pub fn constancy(values: &[f64], rule: &QuadratureRule) -> f64 {
    let avg = rule.average(values);
    values.iter().map(|v| (v / avg - 1.0).abs()).fold(0.0, f64::max)
}

/// Roundoff slack, in units of `ε_mach |J|`, of the descent's acceptance test.
pub const ROUNDOFF_ULPS: f64 = 64.0;

/// Trace values never rise by more than the roundoff slack.
pub fn non_increasing(trace: &[DescentRow]) -> bool {
    trace.windows(2).all(|w| w[1].value <= w[0].value + ROUNDOFF_ULPS * f64::EPSILON * w[0].value.abs())
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Preconditioned steepest descent with Armijo backtracking from `initial`.
///
/// Near convergence the Armijo test drowns in roundoff; a step that does not
/// raise `J` beyond [`ROUNDOFF_ULPS`] ulps and does shrink the gradient is then
/// accepted, so the trace is non-increasing up to that slack.
pub fn minimize_quotient(
    objective: &LogQuotient,
    initial: &ZonalFunction,
    opts: &DescentOptions,
) -> Result<Minimization> {
    let mut b = objective.coordinates_of(initial)?;
    let mut cur = objective.evaluate(&b)?;
    let mut gnorm = sup_norm(&cur.gradient);
    let mut trace = vec![DescentRow { iter: 0, value: cur.value, grad_norm: gnorm, step: 0.0 }];
    let mut step = 1.0f64;
    let mut status = DescentStatus::MaxIterations;
    let pre = objective.preconditioner();

    for iter in 1..=opts.max_iter {
        if gnorm <= opts.grad_tol * cur.value.abs() {
            status = DescentStatus::Converged;
            break;
        }
        let dir: Vec<f64> = cur.gradient.iter().zip(pre).map(|(g, d)| -g / d).collect();
        let slope: f64 = cur.gradient.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let mut s = (2.0 * step).min(opts.max_step);
        let mut accepted = None;
        for _ in 0..opts.max_halvings {
            let trial: Vec<f64> = b.iter().zip(&dir).map(|(x, d)| x + s * d).collect();
            let value = objective.value(&trial)?;
            if value <= cur.value + opts.armijo * s * slope {
                accepted = Some((trial.clone(), objective.evaluate(&trial)?));
                break;
            }
            if value <= cur.value + ROUNDOFF_ULPS * f64::EPSILON * cur.value.abs() {
                let eval = objective.evaluate(&trial)?;
                if sup_norm(&eval.gradient) < gnorm {
                    accepted = Some((trial, eval));
                    break;
                }
            }
            s /= 2.0;
        }
        let Some((trial, eval)) = accepted else {
            status = DescentStatus::LineSearchFailed;
            log::warn!("line search failed at iteration {iter}, |grad| = {gnorm:e}");
            break;
        };
        step = s;
        b = trial;
        cur = eval;
        gnorm = sup_norm(&cur.gradient);
        trace.push(DescentRow { iter, value: cur.value, grad_norm: gnorm, step });
    }
    if status == DescentStatus::MaxIterations && gnorm <= opts.grad_tol * cur.value.abs() {
        status = DescentStatus::Converged;
    }

    let rule = objective.rule();
    let alpha = objective.params.alpha;
    let power = rule.integrate_map(&cur.phi, |x| x.powf(1.0 - alpha));
    let c = power.powf(1.0 / (alpha - 1.0));
    let values: Vec<f64> = cur.phi.iter().map(|p| c * p).collect();
    let minimizer = ZonalFunction::analyze_quiet(rule, &values, rule.len() - 1)?;
    Ok(Minimization { minimizer, values, value: cur.value, status, trace })
}

/// `S = 𝒮 / ‖v^{-1}‖^{α+1}_{L^{α-1}}`, the multiplier of the minimizer equation.
pub fn multiplier(v: &ZonalFunction, value: f64, params: &ProblemParams, rule: &QuadratureRule) -> Result<f64> {
    let vals = positive_grid(v, rule)?;
    let power = rule.integrate_map(&vals, |x| x.powf(1.0 - params.alpha));
    Ok(value / power.powf((params.alpha + 1.0) / (params.alpha - 1.0)))
}

fn positive_grid(v: &ZonalFunction, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let vals = v.synthesize(rule)?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositive { min });
    }
    Ok(vals)
}

/// `sup |Pv - εP(1)v - S v^{-α}| / sup |Pv - εP(1)v|` on the grid, `Pv` spectral.
pub fn euler_lagrange_residual(
    v: &ZonalFunction,
    params: &ProblemParams,
    s: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let vals = positive_grid(v, rule)?;
    let pv = v.apply_gjms(params.m).synthesize(rule)?;
    let e0 = params.constant_eigenvalue();
    let lhs: Vec<f64> = pv.iter().zip(&vals).map(|(p, x)| p - params.eps * e0 * x).collect();
    let num = lhs.iter().zip(&vals).map(|(l, x)| (l - s * x.powf(-params.alpha)).abs()).fold(0.0, f64::max);
    Ok(num / sup_norm(&lhs))
}

/// `|(1-ε)∫v - ∫v^{-α}| / ∫v`.
pub fn mass_balance_residual(v: &ZonalFunction, params: &ProblemParams, rule: &QuadratureRule) -> Result<f64> {
    let vals = positive_grid(v, rule)?;
    let total = rule.integrate(&vals);
    let inverse = rule.integrate_map(&vals, |x| x.powf(-params.alpha));
    Ok(((1.0 - params.eps) * total - inverse).abs() / total)
}

/// The `t > 0` with `t^{1+α} = P(1)/S`, turning a solution of the multiplier
/// equation into one of `Pv = P(1)(εv + v^{-α})`.
pub fn rescale_factor(params: &ProblemParams, s: f64) -> Result<f64> {
    let ratio = params.constant_eigenvalue() / s;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::InvalidParams(format!("multiplier {s} has the wrong sign for rescaling")));
    }
    Ok(ratio.powf(1.0 / (1.0 + params.alpha)))
}

/// Minimizer rescaled to solve `Pv = P(1)(εv + v^{-α})`.
pub fn rescale_to_equation(min: &Minimization, params: &ProblemParams, rule: &QuadratureRule) -> Result<ZonalFunction> {
    let s = multiplier(&min.minimizer, min.value, params, rule)?;
    Ok(min.minimizer.scaled(rescale_factor(params, s)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    pub degree: usize,
    pub resolution: usize,
    pub starts: usize,
    /// Degree and amplitude of the random initial guesses.
    pub initial_degree: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub descent: DescentOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            degree: 24,
            resolution: 64,
            starts: 5,
            initial_degree: 6,
            amplitude: 0.5,
            seed: 0,
            descent: DescentOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub eps: f64,
    pub alpha: f64,
    /// Max over runs of `sup |v/⨍v - 1|`.
    pub constancy: f64,
    /// Smallest quotient value found.
    pub value: f64,
    pub predicted: f64,
    pub converged: bool,
    /// At `ε = 0` and critical `α` the problem is conformally invariant and
    /// constancy is not expected.
    pub conformally_invariant: bool,
    pub error: Option<String>,
}

impl SweepCell {
    /// Constancy below threshold, or the quotient at the sharp value for the invariant cell.
    pub fn pass(&self) -> bool {
        if self.error.is_some() {
            return false;
        }
        if self.conformally_invariant {
            tolerances::close(self.value, self.predicted, tolerances::QUOTIENT)
        } else {
            self.converged && self.constancy < tolerances::CONSTANCY
        }
    }
}

fn run_cell(params: &ProblemParams, opts: &SweepOptions, rule: &Arc<QuadratureRule>) -> Result<SweepCell> {
    let objective = LogQuotient::new(params, rule.clone(), opts.degree)?;
    let runs: Vec<Result<Minimization>> = (0..opts.starts)
        .into_par_iter()
        .map(|i| {
            let init = random_positive_zonal(params.n, opts.seed + i as u64, opts.initial_degree, opts.amplitude)?;
            minimize_quotient(&objective, &init, &opts.descent)
        })
        .collect();
    let runs: Vec<Minimization> = runs.into_iter().collect::<Result<_>>()?;
    Ok(SweepCell {
        eps: params.eps,
        alpha: params.alpha,
        constancy: runs.iter().map(|r| r.constancy(rule)).fold(0.0, f64::max),
        value: runs.iter().map(|r| r.value).fold(f64::INFINITY, f64::min),
        predicted: params.predicted_infimum(),
        converged: runs.iter().all(Minimization::converged),
        conformally_invariant: params.eps == 0.0 && params.is_critical(),
        error: None,
    })
}

/// Minimizes from several seeded non-constant starts on every `(ε, α)` cell.
/// Failed cells are recorded and the sweep continues.
pub fn liouville_sweep(
    n: usize,
    m: usize,
    eps_grid: &[f64],
    alpha_grid: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepCell>> {
    let rule = QuadratureRule::shared(n, opts.resolution)?;
    let cells: Vec<(f64, f64)> = eps_grid.iter().flat_map(|&e| alpha_grid.iter().map(move |&a| (e, a))).collect();
    Ok(cells
        .par_iter()
        .map(|&(eps, alpha)| {
            let params = ProblemParams::unchecked(n, m, alpha, eps);
            run_cell(&params, opts, &rule).unwrap_or_else(|e| SweepCell {
                eps,
                alpha,
                constancy: f64::NAN,
                value: f64::NAN,
                predicted: params.predicted_infimum(),
                converged: false,
                conformally_invariant: eps == 0.0 && params.is_critical(),
                error: Some(e.to_string()),
            })
        })
        .collect())
}

/// The largest tested `ε` at which every non-invariant cell passes the constancy threshold.
pub fn empirical_constancy_threshold(cells: &[SweepCell]) -> Option<f64> {
    let mut eps: Vec<f64> = cells.iter().map(|c| c.eps).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    eps.into_iter()
        .filter(|&e| {
            cells
                .iter()
                .filter(|c| c.eps == e && !c.conformally_invariant)
                .all(|c| c.error.is_none() && c.constancy < tolerances::CONSTANCY)
        })
        .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.max(e))))
}

/// `eps,alpha,constancy,S_eps,S_eps_predicted,converged`.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("eps,alpha,constancy,S_eps,S_eps_predicted,converged\n");
    for c in cells {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            c.eps, c.alpha, c.constancy, c.value, c.predicted, c.converged
        )
        .expect("write to String");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompactnessRow {
    pub eps: f64,
    pub min: f64,
    pub max: f64,
    pub converged: bool,
}

impl CompactnessRow {
    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }
}

/// Extremes of the equation-normalized minimizers across an `ε` grid, starting
/// from the first seeded initial guess.
pub fn compactness_sweep(base: &ProblemParams, eps_grid: &[f64], opts: &SweepOptions) -> Result<Vec<CompactnessRow>> {
    let rule = QuadratureRule::shared(base.n, opts.resolution)?;
    let init = random_positive_zonal(base.n, opts.seed, opts.initial_degree, opts.amplitude)?;
    eps_grid
        .par_iter()
        .map(|&eps| {
            let params = base.with_eps(eps);
            let objective = LogQuotient::new(&params, rule.clone(), opts.degree)?;
            let min = minimize_quotient(&objective, &init, &opts.descent)?;
            let v = rescale_to_equation(&min, &params, &rule)?;
            let vals = v.synthesize(&rule)?;
            Ok(CompactnessRow {
                eps,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(0.0, f64::max),
                converged: min.converged(),
            })
        })
        .collect()
}

/// `sup max/min` over the rows: the empirical two-sided bound.
pub fn empirical_bound(rows: &[CompactnessRow]) -> f64 {
    rows.iter().map(CompactnessRow::ratio).fold(1.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DilationRow {
    pub delta: f64,
    pub max: f64,
    pub quotient: f64,
}

/// The conformal dilations of `v ≡ 1` and their critical, unperturbed quotient.
pub fn dilation_family(n: usize, m: usize, deltas: &[f64], resolution: usize) -> Result<Vec<DilationRow>> {
    let rule = QuadratureRule::new(n, resolution)?;
    let crit = ProblemParams::unchecked(n, m, 0.0, 0.0);
    let params = crit.with_alpha(crit.critical_alpha());
    let one = ZonalFunction::constant(n, 1.0);
    deltas
        .iter()
        .map(|&delta| {
            let v = dilate(&one, delta, m, &rule)?;
            let vals = v.synthesize(&rule)?;
            Ok(DilationRow {
                delta,
                max: vals.iter().copied().fold(0.0, f64::max).max(v.eval(1.0)),
                quotient: sobolev_quotient(&v, &params, &rule)?,
            })
        })
        .collect()
}

/// Descent trace CSV: `iter,value,grad_norm,step`.
pub fn descent_csv(trace: &[DescentRow]) -> String {
    let mut out = String::from("iter,value,grad_norm,step\n");
    for r in trace {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.iter, r.value, r.grad_norm, r.step).expect("write to String");
    }
    out
}
