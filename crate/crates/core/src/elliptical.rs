//! Gaussian and Student-t elliptical families: density generators,
//! normalization constants, joint log-densities and the CDF of the
//! conditional generator that skews the EGSE density.

use crate::error::{EgseError, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{ln_gamma_diff, normal_cdf, student_cdf, LN_SQRT_2PI};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Elliptical family. `Student { nu }` requires ν > 0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GeneratorKind {
    Gaussian,
    Student { nu: f64 },
}

impl GeneratorKind {
    pub fn student(nu: f64) -> Result<Self> {
        if nu > 0.0 && !nu.is_nan() {
            Ok(GeneratorKind::Student { nu })
        } else {
            Err(EgseError::Argument(format!(
                "Student degrees of freedom must be positive, got {nu}"
            )))
        }
    }

    /// Degrees of freedom, ∞ for the Gaussian family.
    pub fn nu(&self) -> f64 {
        match self {
            GeneratorKind::Gaussian => f64::INFINITY,
            GeneratorKind::Student { nu } => *nu,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, GeneratorKind::Gaussian)
    }

    fn validate(&self) -> Result<()> {
        match self {
            GeneratorKind::Gaussian => Ok(()),
            GeneratorKind::Student { nu } => GeneratorKind::student(*nu).map(|_| ()),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::Gaussian => write!(f, "normal"),
            GeneratorKind::Student { nu } => write!(f, "student:{nu}"),
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = EgseError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "normal" || s == "gaussian" {
            return Ok(GeneratorKind::Gaussian);
        }
        if let Some(v) = s.strip_prefix("student:") {
            let nu: f64 = v
                .parse()
                .map_err(|_| EgseError::Argument(format!("bad degrees of freedom `{v}`")))?;
            return GeneratorKind::student(nu);
        }
        Err(EgseError::Argument(format!(
            "unknown generator `{s}` (expected `normal` or `student:<nu>`)"
        )))
    }
}

/// Location and dispersion of an elliptical law, with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct EllipticalParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    ln_det: f64,
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky(sigma: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = sigma.nrows();
    if n == 0 || sigma.ncols() != n {
        return Err(EgseError::Matrix(format!(
            "dispersion must be a non-empty square matrix, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(EgseError::Matrix("dispersion has non-finite entries".into()));
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (sigma[(i, j)], sigma[(j, i)]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(EgseError::Matrix(format!(
                    "dispersion is not symmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
        }
    }
    Cholesky::new(sigma.clone())
        .ok_or_else(|| EgseError::Matrix("dispersion is not positive definite".into()))
}

impl EllipticalParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        if mu.len() != sigma.nrows() {
            return Err(EgseError::Matrix(format!(
                "location has length {} but dispersion is {}x{}",
                mu.len(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let chol = cholesky(&sigma)?;
        let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self { mu, sigma, chol, ln_det })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    /// Lower Cholesky factor L with Σ = LLᵀ.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// log |Σ|
    pub fn ln_det(&self) -> f64 {
        self.ln_det
    }

    /// Σ⁻¹ v by Cholesky solve.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// (x−μ)ᵀΣ⁻¹(x−μ) for a centered vector d = x − μ.
    pub fn quad_form_centered(&self, d: &DVector<f64>) -> f64 {
        let mut z = d.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        // the upper triangle of l_dirty holds stale data, but the lower solve only reads the lower part
        z.norm_squared()
    }
}

fn check_dim(x: &[f64], p: &EllipticalParams) -> Result<()> {
    if x.len() != p.dim() {
        return Err(EgseError::Matrix(format!(
            "point has dimension {} but parameters have dimension {}",
            x.len(),
            p.dim()
        )));
    }
    Ok(())
}

/// log g⁽ⁿ⁾(u).
pub fn ln_generator(kind: GeneratorKind, n: usize, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(EgseError::Argument(format!(
            "generator argument must be non-negative, got {u}"
        )));
    }
    kind.validate()?;
    Ok(match kind {
        GeneratorKind::Gaussian => -0.5 * u,
        GeneratorKind::Student { nu } => -0.5 * (nu + n as f64) * (u / nu).ln_1p(),
    })
}

/// g⁽ⁿ⁾(u): exp(−u/2) or (1 + u/ν)^(−(ν+n)/2).
pub fn generator_value(kind: GeneratorKind, n: usize, u: f64) -> Result<f64> {
    ln_generator(kind, n, u).map(f64::exp)
}

/// log Z_{g⁽ⁿ⁾}.
pub fn ln_normalization_constant(kind: GeneratorKind, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(EgseError::Argument("dimension must be at least 1".into()));
    }
    kind.validate()?;
    let nf = n as f64;
    Ok(match kind {
        GeneratorKind::Gaussian => nf * LN_SQRT_2PI,
        GeneratorKind::Student { nu } => 0.5 * nf * (nu * PI).ln() - ln_gamma_diff(0.5 * nu, 0.5 * nf),
    })
}

/// Z_{g⁽ⁿ⁾}: (2π)^{n/2} or Γ(ν/2)(νπ)^{n/2}/Γ((ν+n)/2).
pub fn normalization_constant(kind: GeneratorKind, n: usize) -> Result<f64> {
    ln_normalization_constant(kind, n).map(f64::exp)
}

/// q(x) = (x−μ)ᵀΣ⁻¹(x−μ).
pub fn mahalanobis(x: &[f64], p: &EllipticalParams) -> Result<f64> {
    check_dim(x, p)?;
    let d = DVector::from_column_slice(x) - p.mu();
    Ok(p.quad_form_centered(&d))
}

/// log of the elliptical density g⁽ⁿ⁾(q(x)) / (|Σ|^{1/2} Z).
pub fn elliptical_logpdf(x: &[f64], p: &EllipticalParams, kind: GeneratorKind) -> Result<f64> {
    let q = mahalanobis(x, p)?;
    let n = p.dim();
    Ok(ln_generator(kind, n, q)? - 0.5 * p.ln_det() - ln_normalization_constant(kind, n)?)
}

/// Standard univariate CDF of the family: Φ or F_ν.
pub fn univariate_cdf(kind: GeneratorKind, z: f64) -> f64 {
    match kind {
        GeneratorKind::Gaussian => normal_cdf(z),
        GeneratorKind::Student { nu } => student_cdf(z, nu),
    }
}

/// Degrees of freedom and scale of the conditional law of Z given an
/// n-dimensional X with Mahalanobis distance q. Gaussian: (∞, 1).
pub(crate) fn conditional_t_scale(kind: GeneratorKind, q: f64, n: usize) -> (f64, f64) {
    match kind {
        GeneratorKind::Gaussian => (f64::INFINITY, 1.0),
        GeneratorKind::Student { nu } => {
            let df = nu + n as f64;
            (df, (df / (nu + q)).sqrt())
        }
    }
}

/// CDF at x of Z | X when (Z, X) is elliptical of dimension n + 1 and X has
/// Mahalanobis distance q. Student: F_{ν+n}(x·√((ν+n)/(ν+q))); Gaussian: Φ(x).
pub fn conditional_skewing_cdf(kind: GeneratorKind, x: f64, q: f64, n: usize) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(EgseError::Argument(format!(
            "quadratic form must be non-negative, got {q}"
        )));
    }
    if n == 0 {
        return Err(EgseError::Argument("dimension must be at least 1".into()));
    }
    kind.validate()?;
    Ok(match kind {
        GeneratorKind::Gaussian => normal_cdf(x),
        GeneratorKind::Student { .. } => {
            let (df, r) = conditional_t_scale(kind, q, n);
            student_cdf(x * r, df)
        }
    })
}

/// The same CDF computed from its definition: ∫_{−∞}^{x} g⁽ⁿ⁺¹⁾(s²+q) ds
/// normalized by the integral over ℝ. Slow; used to cross-check the closed form.
pub fn conditional_skewing_cdf_quadrature(kind: GeneratorKind, x: f64, q: f64, n: usize) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(EgseError::Argument(format!(
            "quadratic form must be non-negative, got {q}"
        )));
    }
    kind.validate()?;
    let base = ln_generator(kind, n + 1, q)?;
    let g = |s: f64| (ln_generator(kind, n + 1, s * s + q).unwrap_or(f64::NEG_INFINITY) - base).exp();
    let opts = QuadOptions::with_tol(1e-12);
    let total = integrate(g, f64::NEG_INFINITY, f64::INFINITY, &opts)?.value;
    // integrate the smaller tail for accuracy
    let part = if x <= 0.0 {
        integrate(g, f64::NEG_INFINITY, x, &opts)?.value
    } else {
        total - integrate(g, x, f64::INFINITY, &opts)?.value
    };
    Ok((part / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(mu: &[f64], sigma: &[f64]) -> EllipticalParams {
        let n = mu.len();
        EllipticalParams::new(DVector::from_column_slice(mu), DMatrix::from_row_slice(n, n, sigma)).unwrap()
    }

    #[test]
    fn generator_spot_values() {
        assert_eq!(generator_value(GeneratorKind::Gaussian, 3, 0.0).unwrap(), 1.0);
        assert_relative_eq!(generator_value(GeneratorKind::Gaussian, 1, 2.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let cauchy = GeneratorKind::student(1.0).unwrap();
        assert_relative_eq!(generator_value(cauchy, 1, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(generator_value(cauchy, 1, -0.1).is_err());
        assert!(generator_value(GeneratorKind::Student { nu: 0.0 }, 1, 1.0).is_err());
    }

    #[test]
    fn normalization_spot_values() {
        assert_relative_eq!(normalization_constant(GeneratorKind::Gaussian, 2).unwrap(), 2.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(normalization_constant(GeneratorKind::Gaussian, 1).unwrap(), (2.0 * PI).sqrt(), epsilon = 1e-13);
        assert_relative_eq!(normalization_constant(GeneratorKind::Student { nu: 1.0 }, 1).unwrap(), PI, epsilon = 1e-13);
        assert!(normalization_constant(GeneratorKind::Student { nu: -1.0 }, 1).is_err());
    }

    #[test]
    fn logpdf_spot_values() {
        let p = params(&[0.0], &[1.0]);
        assert_relative_eq!(elliptical_logpdf(&[0.0], &p, GeneratorKind::Gaussian).unwrap(), 0.398_942_280_401_432_7f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(
            elliptical_logpdf(&[1.0], &p, GeneratorKind::Student { nu: 1.0 }).unwrap(),
            (1.0 / (2.0 * PI)).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn mahalanobis_values() {
        let p = params(&[1.0, 1.0], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(mahalanobis(&[1.0, 1.0], &p).unwrap(), 0.0);
        assert_relative_eq!(mahalanobis(&[4.0, 5.0], &p).unwrap(), 25.0, epsilon = 1e-12);
        let p = params(&[0.0, 0.0], &[2.0, 0.0, 0.0, 2.0]);
        assert_relative_eq!(mahalanobis(&[1.0, 1.0], &p).unwrap(), 1.0, epsilon = 1e-14);
        assert!(mahalanobis(&[1.0], &p).is_err());
    }

    #[test]
    fn bad_dispersion_is_matrix_error() {
        let bad = EllipticalParams::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(bad, Err(EgseError::Matrix(_))));
        let asym = EllipticalParams::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]));
        assert!(matches!(asym, Err(EgseError::Matrix(_))));
    }

    #[test]
    fn univariate_cdf_values() {
        let t1 = GeneratorKind::Student { nu: 1.0 };
        assert_eq!(univariate_cdf(GeneratorKind::Gaussian, 0.0), 0.5);
        assert_eq!(univariate_cdf(t1, 0.0), 0.5);
        assert_relative_eq!(univariate_cdf(t1, 1.0), 0.75, epsilon = 1e-14);
        assert_relative_eq!(univariate_cdf(GeneratorKind::Gaussian, 1.959964), 0.975, epsilon = 1e-7);
        for &z in &[-4.0, -1.3, 0.2, 2.5] {
            for k in [GeneratorKind::Gaussian, t1, GeneratorKind::Student { nu: 7.5 }] {
                assert_relative_eq!(univariate_cdf(k, z) + univariate_cdf(k, -z), 1.0, epsilon = 1e-12);
            }
        }
        let big = GeneratorKind::Student { nu: 1e6 };
        for k in 0..=100 {
            let z = -5.0 + 0.1 * k as f64;
            assert!((univariate_cdf(big, z) - normal_cdf(z)).abs() <= 1e-3);
        }
    }

    #[test]
    fn skewing_cdf_spot_values() {
        let t2 = GeneratorKind::Student { nu: 2.0 };
        assert_eq!(conditional_skewing_cdf(t2, 0.0, 3.0, 1).unwrap(), 0.5);
        assert_relative_eq!(
            conditional_skewing_cdf(GeneratorKind::Gaussian, 1.0, 7.3, 2).unwrap(),
            0.841_344_746_068_542_9,
            epsilon = 1e-12
        );
        assert_relative_eq!(conditional_skewing_cdf(t2, 1.0, 1.0, 1).unwrap(), 0.804_498_890_522_114_8, epsilon = 1e-12);
        assert!(conditional_skewing_cdf(t2, 1.0, -1.0, 1).is_err());
    }

    #[test]
    fn skewing_cdf_matches_quadrature() {
        for kind in [GeneratorKind::Gaussian, GeneratorKind::Student { nu: 3.5 }] {
            for n in 1..=3 {
                for &(x, q) in &[(-2.0, 0.5), (0.3, 4.0), (1.7, 0.0), (-0.4, 12.0)] {
                    let closed = conditional_skewing_cdf(kind, x, q, n).unwrap();
                    let quad = conditional_skewing_cdf_quadrature(kind, x, q, n).unwrap();
                    assert!((closed - quad).abs() < 1e-8, "{kind} n={n} x={x} q={q}: {closed} vs {quad}");
                }
            }
        }
    }

    #[test]
    fn generator_tokens() {
        assert_eq!("normal".parse::<GeneratorKind>().unwrap(), GeneratorKind::Gaussian);
        assert_eq!("student:5".parse::<GeneratorKind>().unwrap(), GeneratorKind::Student { nu: 5.0 });
        assert!("student:-1".parse::<GeneratorKind>().is_err());
        assert!("laplace".parse::<GeneratorKind>().is_err());
        assert_eq!(GeneratorKind::Student { nu: 5.0 }.to_string(), "student:5");
    }
}
