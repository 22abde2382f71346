//! Maximum-likelihood estimation with analytic gradients.
//!
//! The optimizer works in an unconstrained chart: μ, the lower Cholesky
//! factor of Σ with log-diagonal, λ, and τ unless it is fixed. Standard errors
//! come from a finite-difference Hessian of the analytic gradient and are
//! reported for (μ, σ, ρ, λ, τ) by the delta method.

use crate::data_io::Dataset;
use crate::density::{to_identifiable, PsiTheta, Theta, CDF_FLOOR};
use crate::elliptical::{cholesky, conditional_t_scale, ln_generator, ln_normalization_constant, GeneratorKind};
use crate::error::{EgseError, Result};
use crate::links::LinkSpec;
use crate::optim::{minimize, OptimOptions};
use crate::special::{normal_cdf, normal_hazard_ratio, student_cdf, student_ln_pdf};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

const ROW_CHUNK: usize = 256;
const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Holds τ at this value instead of estimating it.
    pub tau_fixed: Option<f64>,
    pub max_iter: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    /// ν values tried by [`profile_nu`].
    pub nu_grid: Vec<f64>,
    /// Try several skewness starts and keep the best optimum.
    pub multi_start: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tau_fixed: None,
            max_iter: 500,
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-9,
            nu_grid: (1..=50).map(f64::from).collect(),
            multi_start: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub psi_hat: PsiTheta,
    /// Names of the reported parameters, e.g. `mu1`, `sigma2`, `rho12`.
    pub param_names: Vec<String>,
    /// Estimates in the reported chart, aligned with `param_names`.
    pub estimates: Vec<f64>,
    /// Standard errors aligned with `param_names`; absent when the observed
    /// information is not positive definite.
    pub std_errors: Option<Vec<f64>>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub fallback_used: bool,
    /// Log-likelihood after each accepted optimizer step.
    pub loglik_trace: Vec<f64>,
    /// (ν, maximized log-likelihood) for each profiled ν.
    pub nu_profile: Vec<(f64, f64)>,
    pub message: String,
}

/// Gradient of the log-likelihood in (μ, Σ, λ, τ).
///
/// `sigma` treats the entries of Σ as independent; [`ThetaGradient::free_sigma`]
/// gives the derivative with respect to each free entry σᵢⱼ, i ≥ j.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGradient {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub tau: f64,
}

impl ThetaGradient {
    pub fn free_sigma(&self) -> Vec<f64> {
        let n = self.mu.len();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                out.push(if i == j { self.sigma[(i, i)] } else { 2.0 * self.sigma[(i, j)] });
            }
        }
        out
    }

    /// (μ, free Σ entries, λ, τ) as one vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.mu.iter().copied().collect();
        v.extend(self.free_sigma());
        v.extend(self.lambda.iter());
        v.push(self.tau);
        v
    }
}

/// Data pushed through the links, with the summed log-Jacobian.
#[derive(Debug, Clone)]
pub struct TransformedData {
    w: Vec<f64>,
    n: usize,
    jacobian: f64,
}

impl TransformedData {
    pub fn new(data: &Dataset, links: &[LinkSpec]) -> Result<Self> {
        data.check_links(links)?;
        let n = data.ncols();
        let mut w = Vec::with_capacity(data.values().len());
        let mut jacobian = 0.0;
        for row in data.rows() {
            for (&v, link) in row.iter().zip(links) {
                w.push(link.forward(v)?);
                jacobian += link.ln_derivative(v)?;
            }
        }
        Ok(Self { w, n, jacobian })
    }

    pub fn nrows(&self) -> usize {
        self.w.len() / self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.w.chunks_exact(self.n)
    }

    /// Column means and covariance (divisor m).
    fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.nrows() as f64;
        let n = self.n;
        let mut mean = DVector::zeros(n);
        for r in self.rows() {
            for j in 0..n {
                mean[j] += r[j];
            }
        }
        mean /= m;
        let mut cov = DMatrix::zeros(n, n);
        for r in self.rows() {
            for a in 0..n {
                for b in 0..n {
                    cov[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]);
                }
            }
        }
        (mean, cov / m)
    }

    fn skewness(&self, j: usize, mean: f64, var: f64) -> f64 {
        let m = self.nrows() as f64;
        let m3: f64 = self.rows().map(|r| (r[j] - mean).powi(3)).sum::<f64>() / m;
        m3 / var.powf(1.5)
    }
}

/// Log of the skewing CDF at A and the ratio pdf/CDF, both consistent with the
/// floor used by the density.
fn ln_cdf_and_hazard(df: f64, x: f64) -> (f64, f64) {
    if df.is_infinite() {
        let c = normal_cdf(x);
        if c < CDF_FLOOR {
            (CDF_FLOOR.ln(), 0.0)
        } else {
            (c.ln(), normal_hazard_ratio(x))
        }
    } else {
        let c = student_cdf(x, df);
        if c < CDF_FLOOR {
            (CDF_FLOOR.ln(), 0.0)
        } else {
            (c.ln(), (student_ln_pdf(x, df) - c.ln()).exp())
        }
    }
}

struct Partial {
    ll: f64,
    mu: DVector<f64>,
    outer: DMatrix<f64>,
    lambda: DVector<f64>,
    tau: f64,
}

/// Log-likelihood and its gradient over already transformed data.
pub fn loglik_and_gradient(data: &TransformedData, theta: &Theta) -> Result<(f64, ThetaGradient)> {
    let n = theta.dim();
    if n != data.n {
        return Err(EgseError::Argument(format!(
            "model dimension {n} does not match {} data columns",
            data.n
        )));
    }
    theta.validate()?;
    let chol = cholesky(&theta.sigma)?;
    let kind = theta.kind;
    let nu = kind.nu();
    let (dlng_num, df) = match kind {
        GeneratorKind::Gaussian => (0.0, f64::INFINITY),
        GeneratorKind::Student { nu } => (nu + n as f64, nu + n as f64),
    };
    let chunks: Vec<&[f64]> = data.w.chunks(ROW_CHUNK * n).collect();
    let partials: Vec<Result<Partial>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut p = Partial {
                ll: 0.0,
                mu: DVector::zeros(n),
                outer: DMatrix::zeros(n, n),
                lambda: DVector::zeros(n),
                tau: 0.0,
            };
            for row in chunk.chunks_exact(n) {
                let d = DVector::from_column_slice(row) - &theta.mu;
                let u = chol.solve(&d);
                let q = d.dot(&u).max(0.0);
                let a = theta.lambda.dot(&d) + theta.tau;
                let (_, r) = conditional_t_scale(kind, q, n);
                let (dlng, dr) = if nu.is_infinite() {
                    (-0.5, 0.0)
                } else {
                    (-0.5 * dlng_num / (nu + q), -0.5 * r / (nu + q))
                };
                let (ln_f, h) = ln_cdf_and_hazard(df, a * r);
                p.ll += ln_generator(kind, n, q)? + ln_f;
                let c1 = dlng + h * a * dr;
                p.mu -= &u * (2.0 * c1) + &theta.lambda * (h * r);
                p.outer.ger(-c1, &u, &u, 1.0);
                p.lambda += &d * (h * r);
                p.tau += h * r;
            }
            Ok(p)
        })
        .collect();

    let m = data.nrows() as f64;
    let mut total = Partial {
        ll: 0.0,
        mu: DVector::zeros(n),
        outer: DMatrix::zeros(n, n),
        lambda: DVector::zeros(n),
        tau: 0.0,
    };
    for p in partials {
        let p = p?;
        total.ll += p.ll;
        total.mu += p.mu;
        total.outer += p.outer;
        total.lambda += p.lambda;
        total.tau += p.tau;
    }

    let sigma_lambda = &theta.sigma * &theta.lambda;
    let s2 = 1.0 + theta.lambda.dot(&sigma_lambda);
    let s = s2.sqrt();
    let b = theta.tau / s;
    let (ln_den, h_den) = ln_cdf_and_hazard(nu, b);
    let db_ds2 = -0.5 * theta.tau / (s2 * s);
    let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let constant = -0.5 * ln_det - ln_normalization_constant(kind, n)? - ln_den;
    let ll = total.ll + m * constant + data.jacobian;

    let precision = chol.inverse();
    let mut g_sigma = total.outer - &precision * (0.5 * m);
    g_sigma -= &theta.lambda * theta.lambda.transpose() * (m * h_den * db_ds2);
    let g_lambda = total.lambda - &sigma_lambda * (2.0 * m * h_den * db_ds2);
    let g_tau = total.tau - m * h_den / s;
    Ok((
        ll,
        ThetaGradient {
            mu: total.mu,
            sigma: g_sigma,
            lambda: g_lambda,
            tau: g_tau,
        },
    ))
}

/// Σₖ log f_Y(yₖ), including the link Jacobian.
pub fn loglikelihood(data: &Dataset, theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    let prepared = theta.prepare()?;
    data.check_links(links)?;
    let terms: Vec<Result<f64>> = data
        .values()
        .par_chunks(data.ncols())
        .map(|row| prepared.egse_logpdf(row, links))
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

/// Gradient of [`loglikelihood`] in (μ, Σ, λ, τ).
pub fn loglik_gradient(data: &Dataset, theta: &Theta, links: &[LinkSpec]) -> Result<ThetaGradient> {
    let t = TransformedData::new(data, links)?;
    loglik_and_gradient(&t, theta).map(|r| r.1)
}

/// Maps between Theta and the optimizer chart.
#[derive(Debug, Clone, Copy)]
pub struct Chart {
    pub n: usize,
    pub kind: GeneratorKind,
    pub tau_fixed: Option<f64>,
}

impl Chart {
    pub fn len(&self) -> usize {
        let n = self.n;
        2 * n + n * (n + 1) / 2 + usize::from(self.tau_fixed.is_none())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_theta(&self, x: &[f64]) -> Result<Theta> {
        let n = self.n;
        let mu = DVector::from_column_slice(&x[..n]);
        let mut l = DMatrix::zeros(n, n);
        let mut k = n;
        for i in 0..n {
            for j in 0..=i {
                l[(i, j)] = if i == j { x[k].exp() } else { x[k] };
                k += 1;
            }
        }
        let raw = &l * l.transpose();
        let sigma = (&raw + raw.transpose()) * 0.5;
        let lambda = DVector::from_column_slice(&x[k..k + n]);
        let tau = self.tau_fixed.unwrap_or_else(|| x[k + n]);
        Theta::new(mu, sigma, lambda, tau, self.kind)
    }

    pub fn from_theta(&self, theta: &Theta) -> Result<Vec<f64>> {
        let l = cholesky(&theta.sigma)?.l();
        let mut x: Vec<f64> = theta.mu.iter().copied().collect();
        for i in 0..self.n {
            for j in 0..=i {
                x.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
            }
        }
        x.extend(theta.lambda.iter());
        if self.tau_fixed.is_none() {
            x.push(theta.tau);
        }
        Ok(x)
    }

    /// Pulls a Theta gradient back to the chart.
    pub fn pull_back(&self, x: &[f64], g: &ThetaGradient) -> Vec<f64> {
        let n = self.n;
        let mut l = DMatrix::zeros(n, n);
        let mut k = n;
        for i in 0..n {
            for j in 0..=i {
                l[(i, j)] = if i == j { x[k].exp() } else { x[k] };
                k += 1;
            }
        }
        let sym = (&g.sigma + g.sigma.transpose()) * 0.5;
        let gl = sym * &l * 2.0;
        let mut out: Vec<f64> = g.mu.iter().copied().collect();
        for i in 0..n {
            for j in 0..=i {
                out.push(if i == j { gl[(i, i)] * l[(i, i)] } else { gl[(i, j)] });
            }
        }
        out.extend(g.lambda.iter());
        if self.tau_fixed.is_none() {
            out.push(g.tau);
        }
        out
    }

    /// Names of the reported parameters.
    pub fn param_names(&self) -> Vec<String> {
        let n = self.n;
        let mut names: Vec<String> = (1..=n).map(|i| format!("mu{i}")).collect();
        names.extend((1..=n).map(|i| format!("sigma{i}")));
        for i in 0..n {
            for j in i + 1..n {
                names.push(format!("rho{}{}", i + 1, j + 1));
            }
        }
        names.extend((1..=n).map(|i| format!("lambda{i}")));
        if self.tau_fixed.is_none() {
            names.push("tau".into());
        }
        names
    }

    /// (μ, σ, ρ, λ, τ) values aligned with [`Chart::param_names`].
    pub fn reported(&self, theta: &Theta) -> Vec<f64> {
        let n = self.n;
        let mut v: Vec<f64> = theta.mu.iter().copied().collect();
        v.extend((0..n).map(|i| theta.scale(i)));
        for i in 0..n {
            for j in i + 1..n {
                v.push(theta.correlation(i, j));
            }
        }
        v.extend(theta.lambda.iter());
        if self.tau_fixed.is_none() {
            v.push(theta.tau);
        }
        v
    }
}

/// Skew-normal moment start for one coordinate: (location, scale, slant).
fn moment_start(mean: f64, var: f64, skew: f64, sign_override: Option<f64>) -> (f64, f64, f64) {
    let b = (2.0 / std::f64::consts::PI).sqrt();
    let (delta, sign) = match sign_override {
        Some(s) => (std::f64::consts::FRAC_1_SQRT_2, s),
        None => {
            let g = skew.abs().min(0.99);
            let c = (2.0 * g / (4.0 - std::f64::consts::PI)).cbrt();
            ((c / (b * (1.0 + c * c).sqrt())).min(0.95), skew.signum())
        }
    };
    let delta = delta * sign;
    let omega = (var / (1.0 - b * b * delta * delta)).sqrt();
    let alpha = delta / (1.0 - delta * delta).sqrt();
    (mean - omega * b * delta, omega, alpha / omega)
}

fn starting_points(t: &TransformedData, chart: &Chart, multi_start: bool) -> Result<Vec<Theta>> {
    let n = chart.n;
    let (mean, mut cov) = t.moments();
    if let GeneratorKind::Student { nu } = chart.kind {
        if nu > 2.0 {
            cov *= (nu - 2.0) / nu;
        }
    }
    let tau = chart.tau_fixed.unwrap_or(0.0);
    let mut starts = Vec::new();
    let skewed = |signs: Option<&[f64]>| -> Result<Theta> {
        let mut mu = mean.clone();
        let mut sigma = cov.clone();
        let mut lambda = DVector::zeros(n);
        let mut scale = DVector::zeros(n);
        for j in 0..n {
            let var = cov[(j, j)];
            let skew = t.skewness(j, mean[j], var);
            let (loc, omega, slant) = moment_start(mean[j], var, skew, signs.map(|s| s[j]));
            mu[j] = loc;
            scale[j] = omega / var.sqrt();
            lambda[j] = slant;
        }
        for a in 0..n {
            for b in 0..n {
                sigma[(a, b)] *= scale[a] * scale[b];
            }
        }
        Theta::new(mu, sigma, lambda, tau, chart.kind)
    };
    starts.push(skewed(None)?);
    if multi_start {
        starts.push(Theta::new(mean.clone(), cov.clone(), DVector::zeros(n), tau, chart.kind)?);
        if n <= 3 {
            for mask in 0..(1u32 << n) {
                let signs: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
                starts.push(skewed(Some(&signs))?);
            }
        }
    }
    Ok(starts)
}

/// Central-difference Hessian of the negative log-likelihood in the chart.
fn chart_hessian(t: &TransformedData, chart: &Chart, x: &[f64]) -> Result<DMatrix<f64>> {
    let k = x.len();
    let grad = |x: &[f64]| -> Result<Vec<f64>> {
        let theta = chart.to_theta(x)?;
        let (_, g) = loglik_and_gradient(t, &theta)?;
        Ok(chart.pull_back(x, &g).into_iter().map(|v| -v).collect())
    };
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        let step = 1e-5 * x[i].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let (gp, gm) = (grad(&xp)?, grad(&xm)?);
        for j in 0..k {
            h[(j, i)] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Standard errors in the reported chart; `None` when the observed
/// information is not positive definite.
pub fn standard_errors_chart(t: &TransformedData, chart: &Chart, theta_hat: &Theta) -> Result<Option<Vec<f64>>> {
    let x = chart.from_theta(theta_hat)?;
    let h = chart_hessian(t, chart, &x)?;
    let Some(chol) = nalgebra::Cholesky::new(h) else {
        return Ok(None);
    };
    let cov = chol.inverse();
    let base = chart.reported(theta_hat);
    let mut jac = DMatrix::zeros(base.len(), x.len());
    for i in 0..x.len() {
        let step = 1e-6 * x[i].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        let (rp, rm) = (chart.reported(&chart.to_theta(&xp)?), chart.reported(&chart.to_theta(&xm)?));
        for r in 0..base.len() {
            jac[(r, i)] = (rp[r] - rm[r]) / (2.0 * step);
        }
    }
    let cov_user = &jac * cov * jac.transpose();
    let se: Vec<f64> = cov_user.diagonal().iter().map(|v| v.sqrt()).collect();
    Ok(se.iter().all(|v| v.is_finite() && *v > 0.0).then_some(se))
}

/// Observed-information standard errors at `theta_hat`, aligned with
/// [`Chart::param_names`].
pub fn standard_errors(data: &Dataset, theta_hat: &Theta, links: &[LinkSpec], tau_fixed: Option<f64>) -> Result<Option<Vec<f64>>> {
    let t = TransformedData::new(data, links)?;
    let chart = Chart {
        n: theta_hat.dim(),
        kind: theta_hat.kind,
        tau_fixed,
    };
    standard_errors_chart(&t, &chart, theta_hat)
}

struct Candidate {
    x: Vec<f64>,
    nll: f64,
    result: crate::optim::OptimResult,
}

/// Maximum-likelihood fit of the EGSE model with ν (if any) held fixed.
pub fn fit_mle(data: &Dataset, links: &[LinkSpec], kind: GeneratorKind, opts: &FitOptions) -> Result<FitResult> {
    fit_with_starts(data, links, kind, opts, None)
}

/// Like [`fit_mle`] but starts the optimizer only at `start`. When τ is
/// fixed, `start.tau` is ignored.
pub fn fit_from(data: &Dataset, links: &[LinkSpec], start: &Theta, opts: &FitOptions) -> Result<FitResult> {
    fit_with_starts(data, links, start.kind, opts, Some(start))
}

fn fit_with_starts(data: &Dataset, links: &[LinkSpec], kind: GeneratorKind, opts: &FitOptions, start: Option<&Theta>) -> Result<FitResult> {
    if data.nrows() < MIN_ROWS {
        return Err(EgseError::Argument(format!(
            "fitting needs at least {MIN_ROWS} rows, got {}",
            data.nrows()
        )));
    }
    if opts.max_iter == 0 || !(opts.gradient_tolerance > 0.0) {
        return Err(EgseError::Argument("max_iter must be >= 1 and tolerances positive".into()));
    }
    let t = TransformedData::new(data, links)?;
    let chart = Chart {
        n: data.ncols(),
        kind,
        tau_fixed: opts.tau_fixed,
    };
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let theta = chart.to_theta(x)?;
        let (ll, g) = loglik_and_gradient(&t, &theta)?;
        Ok((-ll, chart.pull_back(x, &g).into_iter().map(|v| -v).collect()))
    };
    let optim_opts = OptimOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.gradient_tolerance,
        step_tol: opts.step_tolerance,
    };
    let starts = match start {
        Some(s) if s.dim() != chart.n => {
            return Err(EgseError::Argument(format!("start has dimension {}, data has {} columns", s.dim(), chart.n)));
        }
        Some(s) => vec![Theta {
            tau: opts.tau_fixed.unwrap_or(s.tau),
            ..s.clone()
        }],
        None => starting_points(&t, &chart, opts.multi_start)?,
    };
    let candidates: Vec<Result<Candidate>> = starts
        .par_iter()
        .map(|s| {
            let x0 = chart.from_theta(s)?;
            let result = minimize(objective, &x0, &optim_opts)?;
            Ok(Candidate {
                x: result.x.clone(),
                nll: result.f,
                result,
            })
        })
        .collect();
    let mut best: Option<Candidate> = None;
    let mut first_err = None;
    for c in candidates {
        match c {
            Ok(c) if c.nll.is_finite() => {
                if best.as_ref().is_none_or(|b| c.nll < b.nll) {
                    best = Some(c);
                }
            }
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or_else(|| EgseError::Numeric("no start produced a finite likelihood".into())));
    };
    let theta_hat = chart.to_theta(&best.x)?;
    let std_errors = standard_errors_chart(&t, &chart, &theta_hat)?;
    if std_errors.is_none() {
        log::warn!("observed information is not positive definite; standard errors omitted");
    }
    Ok(FitResult {
        psi_hat: to_identifiable(&theta_hat)?,
        param_names: chart.param_names(),
        estimates: chart.reported(&theta_hat),
        theta_hat,
        std_errors,
        loglik: -best.nll,
        converged: best.result.converged,
        iterations: best.result.iterations,
        grad_norm: best.result.grad_norm,
        fallback_used: best.result.fallback_used,
        loglik_trace: best.result.history.iter().map(|v| -v).collect(),
        nu_profile: Vec::new(),
        message: best.result.message,
    })
}

/// Fits the Student model for every ν in `opts.nu_grid` and returns the fit
/// with the highest log-likelihood, with the whole profile attached.
pub fn profile_nu(data: &Dataset, links: &[LinkSpec], opts: &FitOptions) -> Result<FitResult> {
    if opts.nu_grid.is_empty() {
        return Err(EgseError::Argument("nu grid is empty".into()));
    }
    let kinds: Vec<GeneratorKind> = opts.nu_grid.iter().map(|&nu| GeneratorKind::student(nu)).collect::<Result<_>>()?;
    let fits: Vec<Result<FitResult>> = kinds.par_iter().map(|&k| fit_mle(data, links, k, opts)).collect();
    let mut profile = Vec::with_capacity(fits.len());
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for (fit, &nu) in fits.into_iter().zip(&opts.nu_grid) {
        match fit {
            Ok(f) => {
                profile.push((nu, f.loglik));
                if best.as_ref().is_none_or(|b| f.loglik > b.loglik) {
                    best = Some(f);
                }
            }
            Err(e) => {
                log::warn!("fit at nu = {nu} failed: {e}");
                profile.push((nu, f64::NAN));
                first_err.get_or_insert(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| first_err.expect("some fit ran"))?;
    best.nu_profile = profile;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::egse_logpdf;
    use crate::sampler::sample_egse;

    fn synthetic(kind: GeneratorKind, m: usize, seed: u64) -> (Dataset, Theta, Vec<LinkSpec>) {
        let theta = Theta::bivariate([-0.5, 0.3], 0.8, 1.2, 0.4, [1.5, -0.7], 0.3, kind).unwrap();
        let links = vec![LinkSpec::logit(), LinkSpec::logit()];
        let b = sample_egse(&theta, &links, m, seed).unwrap();
        let data = Dataset::from_rows(b.rows().map(<[f64]>::to_vec).collect(), &links).unwrap();
        (data, theta, links)
    }

    #[test]
    fn loglik_is_sum_of_logpdf() {
        let (data, theta, links) = synthetic(GeneratorKind::Student { nu: 4.0 }, 50, 1);
        let direct: f64 = data.rows().map(|r| egse_logpdf(r, &theta, &links).unwrap()).sum();
        let ll = loglikelihood(&data, &theta, &links).unwrap();
        assert!((ll - direct).abs() < 1e-9 * direct.abs());
        let t = TransformedData::new(&data, &links).unwrap();
        let (fused, _) = loglik_and_gradient(&t, &theta).unwrap();
        assert!((fused - ll).abs() < 1e-9 * ll.abs());
    }

    #[test]
    fn chart_round_trip() {
        let (_, theta, _) = synthetic(GeneratorKind::Gaussian, 20, 1);
        for tau_fixed in [None, Some(0.3)] {
            let chart = Chart { n: 2, kind: theta.kind, tau_fixed };
            let x = chart.from_theta(&theta).unwrap();
            assert_eq!(x.len(), chart.len());
            let back = chart.to_theta(&x).unwrap();
            assert!((back.sigma - &theta.sigma).abs().max() < 1e-14);
            assert_eq!(chart.param_names().len(), chart.reported(&theta).len());
        }
    }

    #[test]
    fn chart_gradient_matches_differences() {
        let (data, theta, links) = synthetic(GeneratorKind::Student { nu: 3.0 }, 200, 2);
        let t = TransformedData::new(&data, &links).unwrap();
        let chart = Chart { n: 2, kind: theta.kind, tau_fixed: None };
        let x = chart.from_theta(&theta).unwrap();
        let (_, g) = loglik_and_gradient(&t, &theta).unwrap();
        let analytic = chart.pull_back(&x, &g);
        for i in 0..x.len() {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fp = loglik_and_gradient(&t, &chart.to_theta(&xp).unwrap()).unwrap().0;
            let fm = loglik_and_gradient(&t, &chart.to_theta(&xm).unwrap()).unwrap().0;
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - analytic[i]).abs() <= 1e-5 * analytic[i].abs().max(1.0), "component {i}: {fd} vs {}", analytic[i]);
        }
    }

    #[test]
    fn too_few_rows() {
        let (data, _, links) = synthetic(GeneratorKind::Gaussian, 5, 3);
        assert!(matches!(
            fit_mle(&data, &links, GeneratorKind::Gaussian, &FitOptions::default()),
            Err(EgseError::Argument(_))
        ));
    }

    #[test]
    fn fit_improves_on_truth_and_is_monotone() {
        let (data, theta, links) = synthetic(GeneratorKind::Gaussian, 400, 4);
        let fit = fit_mle(&data, &links, GeneratorKind::Gaussian, &FitOptions::default()).unwrap();
        assert!(fit.converged, "{}", fit.message);
        assert!(fit.loglik >= loglikelihood(&data, &theta, &links).unwrap() - 1e-6);
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(fit.psi_hat, to_identifiable(&fit.theta_hat).unwrap());
        let se = fit.std_errors.expect("positive definite information");
        assert_eq!(se.len(), fit.param_names.len());
    }
}
