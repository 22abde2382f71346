//! Mixed moments and Kullback–Leibler divergences.

use crate::density::{PreparedTheta, Theta};
use crate::elliptical::GeneratorKind;
use crate::error::{EgseError, Result};
use crate::links::{LinkKind, LinkSpec};
use crate::sampler::{sample_egse, sample_ese};
use crate::special::normal_cdf;
use nalgebra::DVector;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentEstimator {
    ClosedFormLogLink,
    MonteCarlo,
}

/// Request for E[∏ Yᵢ^{mᵢ}].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRequest {
    pub exponents: Vec<u32>,
    pub estimator: MomentEstimator,
    pub mc_size: usize,
    pub seed: u64,
}

/// A moment or divergence estimate; `stderr` is 0 for closed forms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub method: MomentEstimator,
}

/// Mean and standard error of the mean, summed in index order.
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (m - 1.0) / m).sqrt())
}

/// E[∏ Yᵢ^{mᵢ}] for log links and the Gaussian family:
/// exp(mᵀμ + ½mᵀΣm) Φ((λᵀΣm + τ)/√(1+λᵀΣλ)) / Φ(τ/√(1+λᵀΣλ)).
pub fn log_link_mixed_moment(m: &[f64], theta: &Theta) -> Result<f64> {
    if !theta.kind.is_gaussian() {
        return Err(EgseError::Unsupported(
            "closed-form log-link moments need the Gaussian family; Student moments may not exist".into(),
        ));
    }
    if m.len() != theta.dim() {
        return Err(EgseError::Argument(format!(
            "{} exponents given for a {}-dimensional model",
            m.len(),
            theta.dim()
        )));
    }
    theta.validate()?;
    let mv = DVector::from_column_slice(m);
    let sm = &theta.sigma * &mv;
    let base = (theta.mu.dot(&mv) + 0.5 * mv.dot(&sm)).exp();
    if theta.lambda.iter().all(|&l| l == 0.0) && theta.tau == 0.0 {
        return Ok(base);
    }
    let s = (1.0 + theta.lambda_quad()).sqrt();
    Ok(base * normal_cdf((theta.lambda.dot(&sm) + theta.tau) / s) / normal_cdf(theta.tau / s))
}

/// Estimates E[∏ Yᵢ^{mᵢ}] with the requested estimator.
pub fn mc_moment(req: &MomentRequest, theta: &Theta, links: &[LinkSpec]) -> Result<Estimate> {
    if req.exponents.len() != theta.dim() {
        return Err(EgseError::Argument(format!(
            "{} exponents given for a {}-dimensional model",
            req.exponents.len(),
            theta.dim()
        )));
    }
    match req.estimator {
        MomentEstimator::ClosedFormLogLink => {
            if !links.iter().all(|l| matches!(l.kind(), LinkKind::Log)) {
                return Err(EgseError::Unsupported("closed-form moments need log links on every coordinate".into()));
            }
            let m: Vec<f64> = req.exponents.iter().map(|&e| e as f64).collect();
            Ok(Estimate {
                estimate: log_link_mixed_moment(&m, theta)?,
                stderr: 0.0,
                method: MomentEstimator::ClosedFormLogLink,
            })
        }
        MomentEstimator::MonteCarlo => {
            if req.mc_size < 1000 {
                return Err(EgseError::Argument(format!(
                    "Monte Carlo size must be at least 1000, got {}",
                    req.mc_size
                )));
            }
            if req.exponents.iter().all(|&e| e == 0) {
                return Ok(Estimate {
                    estimate: 1.0,
                    stderr: 0.0,
                    method: MomentEstimator::MonteCarlo,
                });
            }
            if let GeneratorKind::Student { nu } = theta.kind {
                log::warn!("moments of the Student family (nu = {nu}) need not exist; the estimate may not converge");
            }
            let batch = sample_egse(theta, links, req.mc_size, req.seed)?;
            let products: Vec<f64> = batch
                .values
                .par_chunks(batch.dim)
                .map(|row| row.iter().zip(&req.exponents).map(|(y, &e)| y.powi(e as i32)).product())
                .collect();
            let (estimate, stderr) = mean_stderr(&products);
            Ok(Estimate {
                estimate,
                stderr,
                method: MomentEstimator::MonteCarlo,
            })
        }
    }
}

/// D_KL(θ₁ ‖ θ₂) by Monte Carlo in W-space. The divergence is invariant under
/// the coordinate-wise links, so none are needed.
pub fn kl_divergence_mc(theta1: &Theta, theta2: &Theta, mc_size: usize, seed: u64) -> Result<Estimate> {
    if theta1.dim() != theta2.dim() {
        return Err(EgseError::Argument("KL divergence needs models of equal dimension".into()));
    }
    if std::mem::discriminant(&theta1.kind) != std::mem::discriminant(&theta2.kind) {
        return Err(EgseError::Argument("KL divergence needs models of the same family".into()));
    }
    if mc_size < 2 {
        return Err(EgseError::Argument("Monte Carlo size must be at least 2".into()));
    }
    let p1 = PreparedTheta::new(theta1)?;
    let p2 = PreparedTheta::new(theta2)?;
    let batch = sample_ese(theta1, mc_size, seed)?;
    let diffs: Result<Vec<f64>> = batch
        .values
        .par_chunks(batch.dim)
        .map(|w| Ok(p1.ese_logpdf(w)? - p2.ese_logpdf(w)?))
        .collect();
    let (estimate, stderr) = mean_stderr(&diffs?);
    Ok(Estimate {
        estimate,
        stderr,
        method: MomentEstimator::MonteCarlo,
    })
}

/// Multivariate normal KL divergence for symmetric Gaussian members.
pub fn kl_gaussian_closed_form(theta1: &Theta, theta2: &Theta) -> Result<f64> {
    for t in [theta1, theta2] {
        if !t.kind.is_gaussian() {
            return Err(EgseError::Unsupported("closed-form KL needs the Gaussian family".into()));
        }
        if t.tau != 0.0 || t.lambda.iter().any(|&l| l != 0.0) {
            return Err(EgseError::Unsupported("closed-form KL needs lambda = 0 and tau = 0".into()));
        }
    }
    if theta1.dim() != theta2.dim() {
        return Err(EgseError::Argument("KL divergence needs models of equal dimension".into()));
    }
    let c1 = crate::elliptical::cholesky(&theta1.sigma)?;
    let c2 = crate::elliptical::cholesky(&theta2.sigma)?;
    let n = theta1.dim() as f64;
    let trace = c2.solve(&theta1.sigma).trace();
    let d = &theta2.mu - &theta1.mu;
    let maha = d.dot(&c2.solve(&d));
    let ln_det = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| 2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(0.5 * (trace + maha - n + ln_det(&c2) - ln_det(&c1)))
}
