//! EGSE and ESE joint log-densities and the identifiable (μ, Σ*, δ, γ) chart.

use crate::elliptical::{
    conditional_skewing_cdf, elliptical_logpdf, ln_generator, ln_normalization_constant, univariate_cdf,
    EllipticalParams, GeneratorKind,
};
use crate::error::{EgseError, Result};
use crate::links::LinkSpec;
use nalgebra::{DMatrix, DVector};

/// Floor applied to skewing probabilities before taking logs.
pub const CDF_FLOOR: f64 = 1e-300;

/// Full EGSE parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub tau: f64,
    pub kind: GeneratorKind,
}

impl Theta {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, lambda: DVector<f64>, tau: f64, kind: GeneratorKind) -> Result<Self> {
        let theta = Self { mu, sigma, lambda, tau, kind };
        theta.validate()?;
        Ok(theta)
    }

    /// Bivariate constructor with Σ = [[σ₁², ρσ₁σ₂], [ρσ₁σ₂, σ₂²]].
    #[allow(clippy::too_many_arguments)]
    pub fn bivariate(mu: [f64; 2], sigma1: f64, sigma2: f64, rho: f64, lambda: [f64; 2], tau: f64, kind: GeneratorKind) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(EgseError::Argument(format!(
                "scales must be positive, got ({sigma1}, {sigma2})"
            )));
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(EgseError::Argument(format!("correlation must lie in (-1, 1), got {rho}")));
        }
        let c = rho * sigma1 * sigma2;
        Self::new(
            DVector::from_column_slice(&mu),
            DMatrix::from_row_slice(2, 2, &[sigma1 * sigma1, c, c, sigma2 * sigma2]),
            DVector::from_column_slice(&lambda),
            tau,
            kind,
        )
    }

    /// Symmetric elliptical member (λ = 0, τ = 0).
    pub fn symmetric(mu: DVector<f64>, sigma: DMatrix<f64>, kind: GeneratorKind) -> Result<Self> {
        let n = mu.len();
        Self::new(mu, sigma, DVector::zeros(n), 0.0, kind)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        if self.lambda.len() != n {
            return Err(EgseError::Matrix(format!(
                "lambda has length {} but mu has length {n}",
                self.lambda.len()
            )));
        }
        if self.mu.iter().chain(self.lambda.iter()).any(|v| !v.is_finite()) || !self.tau.is_finite() {
            return Err(EgseError::Argument("parameters must be finite".into()));
        }
        if let GeneratorKind::Student { nu } = self.kind {
            GeneratorKind::student(nu)?;
        }
        EllipticalParams::new(self.mu.clone(), self.sigma.clone()).map(|_| ())
    }

    /// Scale √σᵢᵢ.
    pub fn scale(&self, i: usize) -> f64 {
        self.sigma[(i, i)].sqrt()
    }

    /// Correlation σᵢⱼ/(σᵢσⱼ).
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i, j)] / (self.scale(i) * self.scale(j))
    }

    /// λᵀΣλ
    pub fn lambda_quad(&self) -> f64 {
        self.lambda.dot(&(&self.sigma * &self.lambda))
    }

    pub fn prepare(&self) -> Result<PreparedTheta> {
        PreparedTheta::new(self)
    }
}

/// Theta with its Cholesky factor and constant terms computed once, for
/// repeated density evaluation.
#[derive(Debug, Clone)]
pub struct PreparedTheta {
    pub(crate) ell: EllipticalParams,
    pub(crate) lambda: DVector<f64>,
    pub(crate) tau: f64,
    pub(crate) kind: GeneratorKind,
    /// −½ log|Σ| − log Z − log F(τ/√(1+λᵀΣλ))
    constant: f64,
}

impl PreparedTheta {
    pub fn new(theta: &Theta) -> Result<Self> {
        theta.validate()?;
        let ell = EllipticalParams::new(theta.mu.clone(), theta.sigma.clone())?;
        let n = theta.dim();
        let den = univariate_cdf(theta.kind, theta.tau / (1.0 + theta.lambda_quad()).sqrt()).max(CDF_FLOOR);
        let constant = -0.5 * ell.ln_det() - ln_normalization_constant(theta.kind, n)? - den.ln();
        Ok(Self {
            ell,
            lambda: theta.lambda.clone(),
            tau: theta.tau,
            kind: theta.kind,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.ell.dim()
    }

    pub fn elliptical(&self) -> &EllipticalParams {
        &self.ell
    }

    /// ESE log-density at w.
    pub fn ese_logpdf(&self, w: &[f64]) -> Result<f64> {
        let n = self.dim();
        if w.len() != n {
            return Err(EgseError::Matrix(format!(
                "point has dimension {} but parameters have dimension {n}",
                w.len()
            )));
        }
        let d = DVector::from_column_slice(w) - self.ell.mu();
        let q = self.ell.quad_form_centered(&d);
        let a = self.lambda.dot(&d) + self.tau;
        let skew = conditional_skewing_cdf(self.kind, a, q, n)?.max(CDF_FLOOR);
        Ok(ln_generator(self.kind, n, q)? + skew.ln() + self.constant)
    }

    /// EGSE log-density at y, together with the transformed point y_G.
    pub fn egse_logpdf(&self, y: &[f64], links: &[LinkSpec]) -> Result<f64> {
        let (w, jac) = transform_point(y, links)?;
        Ok(self.ese_logpdf(&w)? + jac)
    }
}

/// Applies the links coordinate-wise: returns (G₁(y₁), ..., Gₙ(yₙ)) and
/// Σ log Gᵢ′(yᵢ).
pub fn transform_point(y: &[f64], links: &[LinkSpec]) -> Result<(Vec<f64>, f64)> {
    if y.len() != links.len() {
        return Err(EgseError::Argument(format!(
            "point has {} coordinates but {} links were given",
            y.len(),
            links.len()
        )));
    }
    let mut w = Vec::with_capacity(y.len());
    let mut jac = 0.0;
    for (&v, link) in y.iter().zip(links) {
        w.push(link.forward(v)?);
        jac += link.ln_derivative(v)?;
    }
    Ok((w, jac))
}

/// log f_W(w) of the ESE law.
pub fn ese_logpdf(w: &[f64], theta: &Theta) -> Result<f64> {
    theta.prepare()?.ese_logpdf(w)
}

/// log f_Y(y) of the EGSE law.
pub fn egse_logpdf(y: &[f64], theta: &Theta, links: &[LinkSpec]) -> Result<f64> {
    if links.len() != theta.dim() {
        return Err(EgseError::Argument(format!(
            "{} links given for a {}-dimensional model",
            links.len(),
            theta.dim()
        )));
    }
    theta.prepare()?.egse_logpdf(y, links)
}

/// Symmetric elliptical log-density of Theta's (μ, Σ), ignoring λ and τ.
pub fn symmetric_logpdf(x: &[f64], theta: &Theta) -> Result<f64> {
    let ell = EllipticalParams::new(theta.mu.clone(), theta.sigma.clone())?;
    elliptical_logpdf(x, &ell, theta.kind)
}

/// Identifiable chart ψ = (μ, Σ*, δ, γ).
///
/// Identifiability is established only for the Gaussian family; the map is
/// defined for both.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTheta {
    pub mu: DVector<f64>,
    /// Correlation matrix ω⁻¹Σω⁻¹.
    pub sigma_star: DMatrix<f64>,
    /// Scales ω = diag(Σ)^{1/2}.
    pub omega: DVector<f64>,
    pub delta: DVector<f64>,
    pub gamma: f64,
}

/// θ → ψ.
pub fn to_identifiable(theta: &Theta) -> Result<PsiTheta> {
    theta.validate()?;
    let n = theta.dim();
    let omega = DVector::from_fn(n, |i, _| theta.scale(i));
    let sigma_star = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            theta.sigma[(i, j)] / (omega[i] * omega[j])
        }
    });
    let s_lambda = &sigma_star * &theta.lambda;
    let scale = (1.0 + theta.lambda.dot(&s_lambda)).sqrt();
    Ok(PsiTheta {
        mu: theta.mu.clone(),
        sigma_star,
        omega,
        delta: s_lambda / scale,
        gamma: theta.tau / scale,
    })
}

/// ψ → (λ, τ).
pub fn from_identifiable(psi: &PsiTheta) -> Result<(DVector<f64>, f64)> {
    let chol = crate::elliptical::cholesky(&psi.sigma_star)?;
    let solved = chol.solve(&psi.delta);
    let r = psi.delta.dot(&solved);
    if !(r < 1.0) {
        return Err(EgseError::Domain {
            link: "identifiable chart (delta' Sigma*^-1 delta < 1)".into(),
            value: r,
        });
    }
    let s = (1.0 - r).sqrt();
    Ok((solved / s, psi.gamma / s))
}

/// Rebuilds the full Theta from ψ.
pub fn theta_from_psi(psi: &PsiTheta, kind: GeneratorKind) -> Result<Theta> {
    let (lambda, tau) = from_identifiable(psi)?;
    let n = psi.mu.len();
    let sigma = DMatrix::from_fn(n, n, |i, j| psi.sigma_star[(i, j)] * psi.omega[i] * psi.omega[j]);
    Theta::new(psi.mu.clone(), sigma, lambda, tau, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_2d, QuadOptions};
    use crate::special::normal_pdf;
    use approx::assert_relative_eq;

    fn swiss_like(kind: GeneratorKind) -> Theta {
        Theta::bivariate([-2.36, 0.02], 0.89, 1.21, -0.71, [-0.14, -0.12], 0.0, kind).unwrap()
    }

    #[test]
    fn zero_skew_identity_link_is_elliptical() {
        let id = [LinkSpec::identity()];
        let theta = Theta::new(DVector::from_element(1, 0.3), DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 0.0, GeneratorKind::Gaussian).unwrap();
        for &x in &[-1.0, 0.0, 2.5] {
            assert_relative_eq!(egse_logpdf(&[x], &theta, &id).unwrap(), symmetric_logpdf(&[x], &theta).unwrap(), epsilon = 1e-13);
        }
    }

    #[test]
    fn skew_normal_at_zero() {
        let theta = Theta::new(DVector::zeros(1), DMatrix::identity(1, 1), DVector::from_element(1, 1.0), 0.0, GeneratorKind::Gaussian).unwrap();
        assert_relative_eq!(ese_logpdf(&[0.0], &theta).unwrap(), normal_pdf(0.0).ln(), epsilon = 1e-14);
        // 2φ(x)Φ(x)
        let x = 0.7;
        let expect = (2.0 * normal_pdf(x) * crate::special::normal_cdf(x)).ln();
        assert_relative_eq!(ese_logpdf(&[x], &theta).unwrap(), expect, epsilon = 1e-13);
    }

    #[test]
    fn change_of_variables_is_exact() {
        let theta = swiss_like(GeneratorKind::Student { nu: 4.0 });
        let links = [LinkSpec::logit(), LinkSpec::logit()];
        let y = [0.12, 0.55];
        let (w, jac) = transform_point(&y, &links).unwrap();
        assert_eq!(egse_logpdf(&y, &theta, &links).unwrap(), ese_logpdf(&w, &theta).unwrap() + jac);
    }

    #[test]
    fn swiss_fit_row_normalizes() {
        let theta = swiss_like(GeneratorKind::Gaussian);
        let links = [LinkSpec::logit(), LinkSpec::logit()];
        let p = theta.prepare().unwrap();
        let q = integrate_2d(
            |a, b| p.egse_logpdf(&[a, b], &links).map(f64::exp).unwrap_or(0.0),
            (0.0, 1.0),
            (0.0, 1.0),
            &QuadOptions::with_tol(1e-8),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-4, "integral {}", q.value);
    }

    #[test]
    fn ese_normalizes_on_plane() {
        let theta = Theta::bivariate([0.3, -0.2], 1.1, 0.8, 0.4, [1.5, -0.7], 0.6, GeneratorKind::Student { nu: 5.0 }).unwrap();
        let p = theta.prepare().unwrap();
        let q = integrate_2d(
            |a, b| p.ese_logpdf(&[a, b]).map(f64::exp).unwrap_or(0.0),
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            &QuadOptions::with_tol(1e-8),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-4, "integral {}", q.value);
    }

    #[test]
    fn reparameterization_examples() {
        let theta = Theta::new(DVector::zeros(1), DMatrix::identity(1, 1), DVector::from_element(1, 1.0), 2.0, GeneratorKind::Gaussian).unwrap();
        let psi = to_identifiable(&theta).unwrap();
        assert_relative_eq!(psi.delta[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(psi.gamma, 2.0f64.sqrt(), epsilon = 1e-15);

        let psi = PsiTheta {
            mu: DVector::zeros(1),
            sigma_star: DMatrix::identity(1, 1),
            omega: DVector::from_element(1, 1.0),
            delta: DVector::from_element(1, 0.6),
            gamma: 0.0,
        };
        let (l, t) = from_identifiable(&psi).unwrap();
        assert_relative_eq!(l[0], 0.75, epsilon = 1e-15);
        assert_eq!(t, 0.0);

        let outside = PsiTheta { delta: DVector::from_element(1, 1.0), ..psi };
        assert!(matches!(from_identifiable(&outside), Err(EgseError::Domain { .. })));
    }

    #[test]
    fn zero_skew_maps_to_zero_delta() {
        let theta = Theta::bivariate([1.0, 2.0], 2.0, 0.5, 0.3, [0.0, 0.0], -0.4, GeneratorKind::Gaussian).unwrap();
        let psi = to_identifiable(&theta).unwrap();
        assert_eq!(psi.delta, DVector::zeros(2));
        assert_eq!(psi.gamma, -0.4);
        let back = theta_from_psi(&psi, theta.kind).unwrap();
        assert_relative_eq!(back.sigma, theta.sigma, epsilon = 1e-14);
    }

    #[test]
    fn tau_zero_denominator_is_one_half() {
        let theta = swiss_like(GeneratorKind::Gaussian);
        let den = univariate_cdf(theta.kind, theta.tau / (1.0 + theta.lambda_quad()).sqrt());
        assert_eq!(den, 0.5);
    }

    #[test]
    fn domain_error_propagates() {
        let theta = swiss_like(GeneratorKind::Gaussian);
        let links = [LinkSpec::logit(), LinkSpec::logit()];
        assert!(matches!(egse_logpdf(&[0.2, 1.0], &theta, &links), Err(EgseError::Domain { .. })));
        assert!(egse_logpdf(&[0.2], &theta, &links[..1]).is_err());
    }
}
