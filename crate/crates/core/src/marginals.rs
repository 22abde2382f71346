//! Univariate extended skew-t / skew-normal laws (EST₁, ESN₁) and the
//! marginal, conditional and selection-conditional distributions they
//! describe.

use crate::density::Theta;
use crate::elliptical::GeneratorKind;
use crate::error::{EgseError, Result};
use crate::links::LinkSpec;
use crate::quadrature::{integrate, QuadOptions};
use crate::roots::brent;
use crate::special::{normal_cdf, normal_ln_pdf, student_cdf, student_ln_pdf};
use nalgebra::DMatrix;

/// EST₁(μ, σ², λ, ν, τ); ν = ∞ gives ESN₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Est1Params {
    pub mu: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub nu: f64,
    pub tau: f64,
}

impl Est1Params {
    pub fn new(mu: f64, sigma2: f64, lambda: f64, nu: f64, tau: f64) -> Result<Self> {
        let p = Self { mu, sigma2, lambda, nu, tau };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(EgseError::Argument(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.nu > 0.0) {
            return Err(EgseError::Argument(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.mu.is_finite() && self.lambda.is_finite() && self.tau.is_finite()) {
            return Err(EgseError::Argument("EST1 parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Log-density of the standardized variable z = (x − μ)/σ.
    fn ln_std_pdf(&self, z: f64) -> f64 {
        let nu = self.nu;
        let a = self.lambda * z + self.tau;
        let den = self.tau / (1.0 + self.lambda * self.lambda).sqrt();
        let (body, skew, base) = if nu.is_infinite() {
            (normal_ln_pdf(z), normal_cdf(a), normal_cdf(den))
        } else {
            (
                student_ln_pdf(z, nu),
                student_cdf(a * ((nu + 1.0) / (nu + z * z)).sqrt(), nu + 1.0),
                student_cdf(den, nu),
            )
        };
        body + skew.max(crate::density::CDF_FLOOR).ln() - base.max(crate::density::CDF_FLOOR).ln()
    }
}

pub fn est1_logpdf(x: f64, p: &Est1Params) -> f64 {
    let s = p.sigma();
    p.ln_std_pdf((x - p.mu) / s) - s.ln()
}

/// Integrates over [a, b] with breakpoints at −10, 0 and 10 so the bulk of a
/// standardized density is never hidden inside an infinite-range transform.
fn integrate_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    let mut cuts = vec![a];
    cuts.extend([-10.0, 0.0, 10.0].into_iter().filter(|&c| c > a && c < b));
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(f, w[0], w[1], opts)?.value;
    }
    Ok(total)
}

/// (P(X ≤ x), P(X > x)), each integrated directly so neither loses precision.
pub fn est1_tails(x: f64, p: &Est1Params) -> Result<(f64, f64)> {
    p.validate()?;
    if x.is_nan() {
        return Err(EgseError::Argument("EST1 CDF at NaN".into()));
    }
    if x == f64::NEG_INFINITY {
        return Ok((0.0, 1.0));
    }
    if x == f64::INFINITY {
        return Ok((1.0, 0.0));
    }
    let z = (x - p.mu) / p.sigma();
    let f = |t: f64| p.ln_std_pdf(t).exp();
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    let lower = integrate_split(&f, f64::NEG_INFINITY, z, &opts)?.max(0.0);
    let upper = integrate_split(&f, z, f64::INFINITY, &opts)?.max(0.0);
    let total = lower + upper;
    if (total - 1.0).abs() > 1e-6 {
        return Err(EgseError::Numeric(format!(
            "EST1 density integrates to {total}, expected 1"
        )));
    }
    Ok((lower / total, upper / total))
}

/// P(X ≤ x) by adaptive quadrature of the density.
pub fn est1_cdf(x: f64, p: &Est1Params) -> Result<f64> {
    est1_tails(x, p).map(|t| t.0)
}

/// P(X > x); est1_cdf + est1_survival = 1.
pub fn est1_survival(x: f64, p: &Est1Params) -> Result<f64> {
    est1_tails(x, p).map(|t| t.1)
}

/// p-quantile by Brent's method, starting from the bracket μ ± 40σ and
/// widening it for heavy tails.
pub fn est1_quantile(prob: f64, p: &Est1Params) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(EgseError::Argument(format!("probability must lie in (0, 1), got {prob}")));
    }
    let s = p.sigma();
    let mut half = 40.0 * s;
    for _ in 0..24 {
        let (lo, hi) = (p.mu - half, p.mu + half);
        let (flo, fhi) = (est1_cdf(lo, p)? - prob, est1_cdf(hi, p)? - prob);
        if flo < 0.0 && fhi > 0.0 {
            return brent(|x| Ok(est1_cdf(x, p)? - prob), lo, hi, 1e-10 * s.max(1e-3), 200);
        }
        half *= 4.0;
    }
    Err(EgseError::Numeric(format!("quantile {prob} not bracketed")))
}

fn check_index(theta: &Theta, i: usize) -> Result<()> {
    if i >= theta.dim() {
        return Err(EgseError::Argument(format!(
            "coordinate {i} out of range for dimension {}",
            theta.dim()
        )));
    }
    Ok(())
}

/// Parameters of the marginal law of Wᵢ.
///
/// Writing λᵀ(X−μ) = cᵢ(Xᵢ−μᵢ) + λ₋ᵢᵀE with E the residual of X₋ᵢ given Xᵢ,
/// the marginal is EST₁(μᵢ, σᵢᵢ, cᵢσᵢᵢ^{1/2}/s, ν, τ/s) where
/// s² = 1 + λ₋ᵢᵀ Σ₋ᵢ|ᵢ λ₋ᵢ.
pub fn marginal_params(theta: &Theta, i: usize) -> Result<Est1Params> {
    check_index(theta, i)?;
    let n = theta.dim();
    let sii = theta.sigma[(i, i)];
    let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let mut c = theta.lambda[i];
    for &k in &others {
        c += theta.lambda[k] * theta.sigma[(k, i)] / sii;
    }
    let mut s2 = 1.0;
    for &a in &others {
        for &b in &others {
            let cond = theta.sigma[(a, b)] - theta.sigma[(a, i)] * theta.sigma[(b, i)] / sii;
            s2 += theta.lambda[a] * cond * theta.lambda[b];
        }
    }
    let s = s2.sqrt();
    Est1Params::new(theta.mu[i], sii, c * sii.sqrt() / s, theta.kind.nu(), theta.tau / s)
}

/// Parameters of Wⱼ | Wᵢ = w for a bivariate model.
pub fn conditional_params(theta: &Theta, i: usize, j: usize, w: f64) -> Result<Est1Params> {
    if theta.dim() != 2 {
        return Err(EgseError::Unsupported(format!(
            "closed-form conditionals are bivariate; model has dimension {}",
            theta.dim()
        )));
    }
    check_index(theta, i)?;
    check_index(theta, j)?;
    if i == j {
        return Err(EgseError::Argument("conditional needs two distinct coordinates".into()));
    }
    let (si, sj) = (theta.scale(i), theta.scale(j));
    let rho = theta.correlation(i, j);
    let z = (w - theta.mu[i]) / si;
    let nu = theta.kind.nu();
    let k = match theta.kind {
        GeneratorKind::Gaussian => 1.0,
        GeneratorKind::Student { nu } => (nu + z * z) / (nu + 1.0),
    };
    let one_m = 1.0 - rho * rho;
    let slope = theta.lambda[i] * si + theta.lambda[j] * sj * rho;
    Est1Params::new(
        theta.mu[j] + sj * rho * z,
        k * sj * sj * one_m,
        theta.lambda[j] * sj * one_m.sqrt(),
        nu + 1.0,
        (slope * z + theta.tau) / k.sqrt(),
    )
}

fn check_links(theta: &Theta, links: &[LinkSpec]) -> Result<()> {
    if links.len() != theta.dim() {
        return Err(EgseError::Argument(format!(
            "{} links given for a {}-dimensional model",
            links.len(),
            theta.dim()
        )));
    }
    Ok(())
}

/// Marginal log-density of Yᵢ.
pub fn marginal_logpdf(y: f64, i: usize, theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    check_links(theta, links)?;
    let p = marginal_params(theta, i)?;
    let link = &links[i];
    Ok(est1_logpdf(link.forward(y)?, &p) + link.ln_derivative(y)?)
}

/// Marginal CDF of Yᵢ.
pub fn marginal_cdf(y: f64, i: usize, theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    check_links(theta, links)?;
    est1_cdf(links[i].forward(y)?, &marginal_params(theta, i)?)
}

/// CDF of Yⱼ at yⱼ given Yᵢ = yᵢ (bivariate).
pub fn conditional_cdf(yj: f64, j: usize, yi: f64, i: usize, theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    check_links(theta, links)?;
    let p = conditional_params(theta, i, j, links[i].forward(yi)?)?;
    est1_cdf(links[j].forward(yj)?, &p)
}

/// log f of Yᵢ given the selection event Yⱼ > κ (bivariate).
pub fn selection_conditional_logpdf(y: f64, i: usize, j: usize, kappa: f64, theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    check_links(theta, links)?;
    let gi = links[i].forward(y)?;
    let gk = links[j].forward(kappa)?;
    let marg_i = marginal_params(theta, i)?;
    let marg_j = marginal_params(theta, j)?;
    let cond = conditional_params(theta, i, j, gi)?;
    let num = est1_survival(gk, &cond)?.max(crate::density::CDF_FLOOR);
    let den = est1_survival(gk, &marg_j)?;
    if !(den > 0.0) {
        return Err(EgseError::Numeric(format!(
            "selection event Y{} > {kappa} has zero probability",
            j + 1
        )));
    }
    Ok(est1_logpdf(gi, &marg_i) + links[i].ln_derivative(y)? + num.ln() - den.ln())
}

/// p-quantile of Yᵢ: Gᵢ⁻¹ of the EST₁ quantile of Wᵢ.
pub fn marginal_quantile(prob: f64, i: usize, theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    check_links(theta, links)?;
    let q = est1_quantile(prob, &marginal_params(theta, i)?)?;
    links[i].inverse(q)
}

/// Conditional dispersion of X₋ᵢ given Xᵢ, exposed for diagnostics.
pub fn conditional_dispersion(theta: &Theta, i: usize) -> Result<DMatrix<f64>> {
    check_index(theta, i)?;
    let n = theta.dim();
    let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let sii = theta.sigma[(i, i)];
    Ok(DMatrix::from_fn(others.len(), others.len(), |a, b| {
        let (a, b) = (others[a], others[b]);
        theta.sigma[(a, b)] - theta.sigma[(a, i)] * theta.sigma[(b, i)] / sii
    }))
}
