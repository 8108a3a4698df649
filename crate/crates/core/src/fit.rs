//! Damped Gauss-Newton least squares and the model fits built on it.
//!
//! Data are sorted by (x, y, σ) before any summation, so a fit depends only on
//! the set of points and not on the order they were supplied in.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, FitError, Result};

type FitResultT<T> = std::result::Result<T, FitError>;

pub const LAMBDA_INITIAL: f64 = 1e-3;
const LAMBDA_CEILING: f64 = 1e20;
const LAMBDA_FLOOR: f64 = 1e-15;
/// Correlation-matrix eigenvalues below this mark a degenerate direction.
const SINGULAR_EIGENVALUE: f64 = 1e-10;
pub const SINE_SCAN_POINTS: usize = 256;
pub const MIN_SINE_POINTS: usize = 8;
/// Fitted C below this is reported as pinned at the C = 0 boundary.
pub const CROSSTALK_C_BOUNDARY: f64 = 1e-9;
const P0_BOUNDARY: f64 = 1e-9;

pub trait Model {
    fn arity(&self) -> usize;

    fn names(&self) -> Vec<String> {
        (0..self.arity()).map(|j| format!("p{j}")).collect()
    }

    fn value(&self, x: f64, params: &[f64]) -> f64;

    /// ∂value/∂params. Defaults to central differences.
    fn gradient(&self, x: f64, params: &[f64], grad: &mut [f64]) {
        let mut p = params.to_vec();
        for j in 0..params.len() {
            let h = 6e-6 * params[j].abs().max(1e-6);
            p[j] = params[j] + h;
            let up = self.value(x, &p);
            p[j] = params[j] - h;
            let down = self.value(x, &p);
            p[j] = params[j];
            grad[j] = (up - down) / (2.0 * h);
        }
    }
}

/// A model given as a closure over (x, params).
pub struct FnModel<F> {
    names: Vec<String>,
    f: F,
}

impl<F: Fn(f64, &[f64]) -> f64> FnModel<F> {
    pub fn new(names: &[&str], f: F) -> Self {
        FnModel {
            names: names.iter().map(|s| s.to_string()).collect(),
            f,
        }
    }
}

impl<F: Fn(f64, &[f64]) -> f64> Model for FnModel<F> {
    fn arity(&self) -> usize {
        self.names.len()
    }

    fn names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn value(&self, x: f64, params: &[f64]) -> f64 {
        (self.f)(x, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative step size below which an accepted step ends the fit.
    pub xtol: f64,
    /// Relative χ² decrease below which an accepted step ends the fit.
    pub ftol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            xtol: 1e-12,
            ftol: 1e-15,
        }
    }
}

/// Points (x, y, σ) sorted ascending. `weighted` is false when σ was not given.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub weighted: bool,
}

impl Dataset {
    pub fn new(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> FitResultT<Self> {
        if x.len() != y.len() {
            return Err(FitError::LengthMismatch(format!("x has {}, y has {}", x.len(), y.len())));
        }
        if let Some(s) = sigma {
            if s.len() != x.len() {
                return Err(FitError::LengthMismatch(format!("x has {}, sigma has {}", x.len(), s.len())));
            }
            if let Some((index, &value)) = s.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
                return Err(FitError::NonPositiveSigma { index, value });
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite("x"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite("y"));
        }
        let s: Vec<f64> = sigma.map_or_else(|| vec![1.0; x.len()], <[f64]>::to_vec);
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| {
            x[a].total_cmp(&x[b])
                .then(y[a].total_cmp(&y[b]))
                .then(s[a].total_cmp(&s[b]))
        });
        Ok(Dataset {
            x: order.iter().map(|&i| x[i]).collect(),
            y: order.iter().map(|&i| y[i]).collect(),
            sigma: order.iter().map(|&i| s[i]).collect(),
            weighted: sigma.is_some(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    /// sqrt(χ²).
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Parameters sitting on the edge of their allowed range.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub at_boundary: Vec<String>,
    /// χ² after each accepted step, starting with the initial point.
    #[serde(skip)]
    pub chi2_trace: Vec<f64>,
}

impl FitResult {
    fn index(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params[self.index(name)]
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.sigmas[self.index(name)]
    }
}

fn residuals<M: Model + ?Sized>(model: &M, p: &[f64], data: &Dataset) -> (DVector<f64>, f64) {
    let r = DVector::from_iterator(
        data.len(),
        (0..data.len()).map(|i| (data.y[i] - model.value(data.x[i], p)) / data.sigma[i]),
    );
    let chi2 = r.iter().map(|v| v * v).sum();
    (r, chi2)
}

/// Rows ∂f(x_i)/∂p / σ_i.
fn jacobian<M: Model + ?Sized>(model: &M, p: &[f64], data: &Dataset) -> DMatrix<f64> {
    let k = p.len();
    let mut j = DMatrix::zeros(data.len(), k);
    let mut grad = vec![0.0; k];
    for i in 0..data.len() {
        model.gradient(data.x[i], p, &mut grad);
        for c in 0..k {
            j[(i, c)] = grad[c] / data.sigma[i];
        }
    }
    j
}

struct Minimum {
    params: Vec<f64>,
    chi2: f64,
    converged: bool,
    iterations: usize,
    trace: Vec<f64>,
}

fn minimize<M: Model + ?Sized>(
    model: &M,
    initial: &[f64],
    data: &Dataset,
    opts: &FitOptions,
) -> FitResultT<Minimum> {
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite("initial parameters"));
    }
    let k = initial.len();
    let mut p = initial.to_vec();
    let (mut r, mut chi2) = residuals(model, &p, data);
    if !chi2.is_finite() {
        return Err(FitError::NonFinite("initial residuals"));
    }
    let mut trace = vec![chi2];
    let mut lambda = LAMBDA_INITIAL;
    let done = |p: Vec<f64>, chi2, converged, iterations, trace| {
        Ok(Minimum {
            params: p,
            chi2,
            converged,
            iterations,
            trace,
        })
    };

    for iteration in 1..=opts.max_iterations {
        if chi2 == 0.0 {
            return done(p, chi2, true, iteration - 1, trace);
        }
        let jac = jacobian(model, &p, data);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if a.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite("jacobian"));
        }
        let max_diag = (0..k).map(|j| a[(j, j)]).fold(0.0, f64::max);
        if max_diag == 0.0 {
            // No parameter moves the model: stationary.
            return done(p, chi2, true, iteration, trace);
        }
        let scale: Vec<f64> = (0..k).map(|j| a[(j, j)].max(1e-12 * max_diag)).collect();

        loop {
            let mut m = a.clone();
            for j in 0..k {
                m[(j, j)] += lambda * scale[j];
            }
            let step = m.cholesky().map(|c| c.solve(&g));
            let accepted = step.and_then(|delta| {
                let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
                let (r_new, chi2_new) = residuals(model, &trial, data);
                (chi2_new.is_finite() && chi2_new <= chi2).then_some((delta, trial, r_new, chi2_new))
            });
            match accepted {
                Some((delta, trial, r_new, chi2_new)) => {
                    let small_step = delta
                        .iter()
                        .zip(p.iter())
                        .all(|(d, v)| d.abs() <= opts.xtol * (v.abs() + opts.xtol));
                    let small_drop = chi2 - chi2_new <= opts.ftol * chi2;
                    p = trial;
                    r = r_new;
                    chi2 = chi2_new;
                    trace.push(chi2);
                    lambda = (lambda / 10.0).max(LAMBDA_FLOOR);
                    if small_step || small_drop {
                        return done(p, chi2, true, iteration, trace);
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_CEILING {
                        // No downhill step exists at working precision.
                        return done(p, chi2, true, iteration, trace);
                    }
                }
            }
        }
    }
    log::debug!("fit stopped after {} iterations without converging", opts.max_iterations);
    done(p, chi2, false, opts.max_iterations, trace)
}

/// (JᵀWJ)⁻¹ at `params`. Degenerate directions are detected on the
/// correlation-normalized matrix and reported by parameter name.
fn normal_inverse<M: Model + ?Sized>(model: &M, params: &[f64], data: &Dataset) -> FitResultT<DMatrix<f64>> {
    let k = params.len();
    let names = model.names();
    let jac = jacobian(model, params, data);
    let a = jac.transpose() * &jac;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite("jacobian"));
    }
    let d: Vec<f64> = (0..k).map(|j| a[(j, j)]).collect();
    let max_d = d.iter().copied().fold(0.0, f64::max);
    let dead: Vec<usize> = (0..k).filter(|&j| !(d[j] > max_d * 1e-30) || d[j] == 0.0).collect();
    if !dead.is_empty() {
        return Err(FitError::Singular {
            params: dead.into_iter().map(|j| names[j].clone()).collect(),
        });
    }
    let s: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let corr = DMatrix::from_fn(k, k, |i, j| a[(i, j)] / (s[i] * s[j]));
    let eig = corr.symmetric_eigen();
    let mut degenerate = vec![false; k];
    for (e, &val) in eig.eigenvalues.iter().enumerate() {
        if val < SINGULAR_EIGENVALUE {
            let v = eig.eigenvectors.column(e);
            let peak = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for j in 0..k {
                if v[j].abs() >= 0.3 * peak {
                    degenerate[j] = true;
                }
            }
        }
    }
    if degenerate.iter().any(|&b| b) {
        return Err(FitError::Singular {
            params: (0..k).filter(|&j| degenerate[j]).map(|j| names[j].clone()).collect(),
        });
    }
    let inv_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    let corr_inv = &eig.eigenvectors * inv_vals * eig.eigenvectors.transpose();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        0.5 * (corr_inv[(i, j)] + corr_inv[(j, i)]) / (s[i] * s[j])
    }))
}

fn assemble(
    names: Vec<String>,
    params: Vec<f64>,
    mut cov: DMatrix<f64>,
    chi2: f64,
    n: usize,
    min: &Minimum,
) -> FitResult {
    let k = params.len();
    let dof = n - k;
    let reduced_chi2 = if dof > 0 { chi2 / dof as f64 } else { f64::NAN };
    if dof > 0 {
        cov *= reduced_chi2;
    }
    FitResult {
        names,
        sigmas: (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
        covariance: (0..k).map(|i| (0..k).map(|j| cov[(i, j)]).collect()).collect(),
        params,
        chi2,
        dof,
        reduced_chi2,
        residual_norm: chi2.sqrt(),
        converged: min.converged,
        iterations: min.iterations,
        at_boundary: Vec::new(),
        chi2_trace: min.trace.clone(),
    }
}

/// Minimizes Σ((y_i − f(x_i))/σ_i)². Covariance is (JᵀWJ)⁻¹ times the
/// reduced χ² (left unscaled when there are no degrees of freedom).
pub fn least_squares_fit<M: Model + ?Sized>(
    model: &M,
    initial: &[f64],
    data: &Dataset,
    opts: &FitOptions,
) -> FitResultT<FitResult> {
    let k = model.arity();
    if initial.len() != k {
        return Err(FitError::LengthMismatch(format!(
            "model takes {k} parameters, {} given",
            initial.len()
        )));
    }
    if data.len() < k {
        return Err(FitError::TooFewPoints {
            needed: k,
            got: data.len(),
        });
    }
    let min = minimize(model, initial, data, opts)?;
    let cov = normal_inverse(model, &min.params, data)?;
    Ok(assemble(model.names(), min.params.clone(), cov, min.chi2, data.len(), &min))
}

struct SineModel;

impl Model for SineModel {
    fn arity(&self) -> usize {
        4
    }

    fn names(&self) -> Vec<String> {
        ["amplitude", "omega", "phase", "offset"].map(String::from).to_vec()
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        p[3] + p[0] * (p[1] * t + p[2]).sin()
    }

    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let (s, c) = (p[1] * t + p[2]).sin_cos();
        g[0] = s;
        g[1] = p[0] * t * c;
        g[2] = p[0] * c;
        g[3] = 1.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub offset: f64,
    pub fit: FitResult,
}

/// Weighted linear least squares of y on [sin ωt, cos ωt, 1]; returns the
/// coefficients and the weighted residual sum of squares.
fn linear_sine(data: &Dataset, omega: f64) -> ([f64; 3], f64) {
    let n = data.len();
    let design = DMatrix::from_fn(n, 3, |i, c| {
        let t = data.x[i];
        let v = match c {
            0 => (omega * t).sin(),
            1 => (omega * t).cos(),
            _ => 1.0,
        };
        v / data.sigma[i]
    });
    let rhs = DVector::from_iterator(n, (0..n).map(|i| data.y[i] / data.sigma[i]));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(3));
    let ssr = (&design * &coef - &rhs).norm_squared();
    ([coef[0], coef[1], coef[2]], ssr)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iterations {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Fits y = offset + amplitude·sin(Ωt + phase). The starting Ω comes from a
/// scan of 256 frequencies up to the mean-spacing Nyquist limit, refined by a
/// golden-section search on the linear-profile residual. The result is
/// normalized to amplitude ≥ 0, Ω ≥ 0 and phase in (−π, π].
pub fn fit_sine(t: &[f64], y: &[f64], sigma: Option<&[f64]>) -> FitResultT<SineFit> {
    let data = Dataset::new(t, y, sigma)?;
    if data.len() < MIN_SINE_POINTS {
        return Err(FitError::TooFewPoints {
            needed: MIN_SINE_POINTS,
            got: data.len(),
        });
    }
    let span = data.x[data.len() - 1] - data.x[0];
    if !(span > 0.0) {
        return Err(FitError::Singular {
            params: vec!["omega".into()],
        });
    }
    let nyquist = PI * (data.len() - 1) as f64 / span;
    let step = nyquist / SINE_SCAN_POINTS as f64;
    let (best_k, _) = (1..=SINE_SCAN_POINTS)
        .map(|k| (k, linear_sine(&data, k as f64 * step).1))
        .fold((1, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let lo = (best_k as f64 - 1.0).max(0.5) * step;
    let hi = (best_k as f64 + 1.0) * step;
    let omega0 = golden_section(|w| linear_sine(&data, w).1, lo, hi, 60);
    let ([a, b, c], _) = linear_sine(&data, omega0);
    let initial = [a.hypot(b), omega0, b.atan2(a), c];

    let mut fit = least_squares_fit(&SineModel, &initial, &data, &FitOptions::default())?;

    let mut signs = [1.0; 4];
    if fit.params[1] < 0.0 {
        // sin(−Ωt + φ) = −sin(Ωt − φ)
        fit.params[0] = -fit.params[0];
        fit.params[1] = -fit.params[1];
        fit.params[2] = -fit.params[2];
        for j in 0..3 {
            signs[j] = -signs[j];
        }
    }
    if fit.params[0] < 0.0 {
        fit.params[0] = -fit.params[0];
        fit.params[2] += PI;
        signs[0] = -signs[0];
    }
    fit.params[2] = wrap_phase(fit.params[2]);
    for i in 0..4 {
        for j in 0..4 {
            fit.covariance[i][j] *= signs[i] * signs[j];
        }
    }
    Ok(SineFit {
        amplitude: fit.params[0],
        omega: fit.params[1],
        phase: fit.params[2],
        offset: fit.params[3],
        fit,
    })
}

/// Wraps into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn logistic(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// F(N) = ½(1 + (2p₀ − 1)e^{−2CN}) in (a, u) with p₀ = logistic(a), C = e^u.
struct DecayReparam;

impl Model for DecayReparam {
    fn arity(&self) -> usize {
        2
    }

    fn names(&self) -> Vec<String> {
        vec!["logit_p0".into(), "log_c".into()]
    }

    fn value(&self, n: f64, p: &[f64]) -> f64 {
        0.5 * (1.0 + (2.0 * logistic(p[0]) - 1.0) * (-2.0 * p[1].exp() * n).exp())
    }

    fn gradient(&self, n: f64, p: &[f64], g: &mut [f64]) {
        let p0 = logistic(p[0]);
        let c = p[1].exp();
        let e = (-2.0 * c * n).exp();
        g[0] = e * p0 * (1.0 - p0);
        g[1] = -(2.0 * p0 - 1.0) * n * e * c;
    }
}

/// The same curve in its natural parameters (p₀, C).
struct Decay;

impl Model for Decay {
    fn arity(&self) -> usize {
        2
    }

    fn names(&self) -> Vec<String> {
        vec!["p0".into(), "C".into()]
    }

    fn value(&self, n: f64, p: &[f64]) -> f64 {
        0.5 * (1.0 + (2.0 * p[0] - 1.0) * (-2.0 * p[1] * n).exp())
    }

    fn gradient(&self, n: f64, p: &[f64], g: &mut [f64]) {
        let e = (-2.0 * p[1] * n).exp();
        g[0] = e;
        g[1] = -(2.0 * p[0] - 1.0) * n * e;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkFit {
    pub p0: f64,
    pub c: f64,
    pub p0_sigma: f64,
    pub c_sigma: f64,
    pub fit: FitResult,
}

/// Fits the cross-talk decay with p₀ ∈ (0, 1) and C > 0 enforced by
/// reparameterization. Covariance is evaluated in (p₀, C) at the optimum.
/// A C driven to the boundary counts as converged and is listed in
/// `at_boundary`.
pub fn fit_crosstalk_decay(n: &[f64], f: &[f64], sigma: Option<&[f64]>) -> FitResultT<CrosstalkFit> {
    if let Some((index, &value)) = n.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(FitError::OutOfDomain {
            name: "N",
            index,
            value,
            domain: "[0, inf)",
        });
    }
    if let Some((index, &value)) = f.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(FitError::OutOfDomain {
            name: "F",
            index,
            value,
            domain: "[0, 1]",
        });
    }
    let data = Dataset::new(n, f, sigma)?;
    if data.len() < 2 {
        return Err(FitError::TooFewPoints {
            needed: 2,
            got: data.len(),
        });
    }

    let n_min = data.x[0];
    let head: Vec<f64> = (0..data.len()).filter(|&i| data.x[i] == n_min).map(|i| data.y[i]).collect();
    let p0_init = (head.iter().sum::<f64>() / head.len() as f64).clamp(0.5 + 1e-3, 1.0 - 1e-6);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..data.len() {
        let contrast = (2.0 * data.y[i] - 1.0) / (2.0 * p0_init - 1.0);
        if contrast > 1e-3 {
            let dn = data.x[i] - n_min;
            sxx += dn * dn;
            sxy += dn * contrast.ln();
        }
    }
    let c_init = if sxx > 0.0 { (-sxy / (2.0 * sxx)).max(1e-6) } else { 1e-6 };
    let initial = [(p0_init / (1.0 - p0_init)).ln(), c_init.ln()];

    let min = minimize(&DecayReparam, &initial, &data, &FitOptions::default())?;
    let natural = [logistic(min.params[0]), min.params[1].exp()];
    let cov = normal_inverse(&Decay, &natural, &data)?;
    let mut fit = assemble(Decay.names(), natural.to_vec(), cov, min.chi2, data.len(), &min);
    if natural[1] < CROSSTALK_C_BOUNDARY {
        fit.at_boundary.push("C".into());
        fit.converged = true;
    }
    if natural[0] > 1.0 - P0_BOUNDARY || natural[0] < P0_BOUNDARY {
        fit.at_boundary.push("p0".into());
    }
    Ok(CrosstalkFit {
        p0: natural[0],
        c: natural[1],
        p0_sigma: fit.sigmas[0],
        c_sigma: fit.sigmas[1],
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slope {
    Negative,
    Positive,
}

impl Slope {
    fn name(self) -> &'static str {
        match self {
            Slope::Negative => "negative",
            Slope::Positive => "positive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCrossing {
    pub x0: f64,
    pub sigma: f64,
    pub slope: f64,
    pub points: usize,
}

pub const MIN_CROSSING_WINDOW: usize = 4;

/// Locates a sign change of the requested direction and fits a line through
/// the `window` (≥ 4) points nearest the interpolated root. When several pairs
/// qualify the steepest one is used. σ comes from the line-fit covariance,
/// scaled by the residual variance only when no per-point σ is given.
pub fn find_zero_crossing(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    slope: Slope,
    window: usize,
) -> Result<ZeroCrossing> {
    let data = Dataset::new(x, y, sigma)?;
    let window = window.max(MIN_CROSSING_WINDOW);
    if data.len() < window {
        return Err(FitError::TooFewPoints {
            needed: window,
            got: data.len(),
        }
        .into());
    }
    let sign = match slope {
        Slope::Negative => 1.0,
        Slope::Positive => -1.0,
    };
    // In the sign-adjusted frame every qualifying crossing goes from > 0 to ≤ 0.
    let bracket = (0..data.len() - 1)
        .filter(|&i| sign * data.y[i] > 0.0 && sign * data.y[i + 1] <= 0.0)
        .fold(None, |best: Option<(usize, f64)>, i| {
            let drop = sign * (data.y[i] - data.y[i + 1]);
            match best {
                Some((_, d)) if d >= drop => best,
                _ => Some((i, drop)),
            }
        });
    let Some((i, _)) = bracket else {
        return Err(Error::NoCrossing { slope: slope.name() });
    };

    // Window centred on the linearly interpolated root.
    let centre = data.x[i] - data.y[i] * (data.x[i + 1] - data.x[i]) / (data.y[i + 1] - data.y[i]);
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| {
        (data.x[a] - centre)
            .abs()
            .total_cmp(&(data.x[b] - centre).abs())
            .then(a.cmp(&b))
    });
    idx.truncate(window);
    idx.sort_unstable();

    let w: Vec<f64> = idx.iter().map(|&j| data.sigma[j].powi(-2)).collect();
    let sw: f64 = w.iter().sum();
    let xbar = idx.iter().zip(&w).map(|(&j, wj)| wj * data.x[j]).sum::<f64>() / sw;
    let ybar = idx.iter().zip(&w).map(|(&j, wj)| wj * data.y[j]).sum::<f64>() / sw;
    let sxx: f64 = idx.iter().zip(&w).map(|(&j, wj)| wj * (data.x[j] - xbar).powi(2)).sum();
    let sxy: f64 = idx
        .iter()
        .zip(&w)
        .map(|(&j, wj)| wj * (data.x[j] - xbar) * (data.y[j] - ybar))
        .sum();
    if !(sxx > 0.0) {
        return Err(FitError::Singular {
            params: vec!["slope".into()],
        }
        .into());
    }
    let b = sxy / sxx;
    if !(sign * b < 0.0) {
        return Err(Error::NoCrossing { slope: slope.name() });
    }
    // y = ybar + b(x − xbar); intercept and slope are uncorrelated in this form.
    let x0 = xbar - ybar / b;
    let scale = if data.weighted {
        1.0
    } else {
        let ssr: f64 = idx
            .iter()
            .zip(&w)
            .map(|(&j, wj)| wj * (data.y[j] - ybar - b * (data.x[j] - xbar)).powi(2))
            .sum();
        ssr / (idx.len() - 2) as f64
    };
    let var_a = scale / sw;
    let var_b = scale / sxx;
    let var_x0 = var_a / (b * b) + ybar * ybar * var_b / b.powi(4);
    Ok(ZeroCrossing {
        x0,
        sigma: var_x0.sqrt(),
        slope: b,
        points: idx.len(),
    })
}
