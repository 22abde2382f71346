//! Strictly increasing link functions `G: D → ℝ` with closed-form inverses
//! and derivatives.
//!
//! Every link carries an open domain `D` (unit interval, half-line or real
//! line). Evaluation on or outside the boundary of `D` is an error rather than
//! a ±∞, so log-densities built on top of a link stay finite.

use crate::error::{EgseError, Result};
use crate::special::{normal_cdf, normal_pdf, normal_quantile};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Open interval on which a link is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Domain {
    /// (0, 1)
    Unit,
    /// (0, ∞)
    Positive,
    /// (−∞, ∞)
    Real,
}

impl Domain {
    /// Strict membership: boundaries and NaN are outside.
    pub fn contains(self, x: f64) -> bool {
        match self {
            Domain::Unit => x > 0.0 && x < 1.0,
            Domain::Positive => x > 0.0 && x < f64::INFINITY,
            Domain::Real => x.is_finite(),
        }
    }

    pub fn bounds(self) -> (f64, f64) {
        match self {
            Domain::Unit => (0.0, 1.0),
            Domain::Positive => (0.0, f64::INFINITY),
            Domain::Real => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Moves a value that rounded onto a finite boundary one ulp back inside.
    fn nudge_inside(self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if x <= lo {
            lo.next_up()
        } else if x >= hi {
            hi.next_down()
        } else {
            x
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Unit => write!(f, "(0, 1)"),
            Domain::Positive => write!(f, "(0, inf)"),
            Domain::Real => write!(f, "(-inf, inf)"),
        }
    }
}

/// A continuous univariate distribution used as the host `H` or `F` of the
/// CDF-ratio and CDF-logit links.
pub trait HostDistribution: Send + Sync + fmt::Debug {
    /// Token used in link strings, e.g. `normal` or `exp:2`.
    fn token(&self) -> String;
    fn support(&self) -> Domain;
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
    /// Inverse survival function.
    fn isf(&self, q: f64) -> f64 {
        self.quantile(1.0 - q)
    }
}

/// Standard normal host, support ℝ.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianHost;

impl HostDistribution for GaussianHost {
    fn token(&self) -> String {
        "normal".into()
    }
    fn support(&self) -> Domain {
        Domain::Real
    }
    fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        normal_pdf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        normal_quantile(p)
    }
    fn sf(&self, x: f64) -> f64 {
        normal_cdf(-x)
    }
    fn isf(&self, q: f64) -> f64 {
        -normal_quantile(q)
    }
}

/// Exponential host with the given rate, support (0, ∞).
#[derive(Debug, Clone, Copy)]
pub struct ExponentialHost {
    pub rate: f64,
}

impl HostDistribution for ExponentialHost {
    fn token(&self) -> String {
        if self.rate == 1.0 {
            "exp".into()
        } else {
            format!("exp:{}", self.rate)
        }
    }
    fn support(&self) -> Domain {
        Domain::Positive
    }
    fn cdf(&self, x: f64) -> f64 {
        -(-self.rate * x).exp_m1()
    }
    fn pdf(&self, x: f64) -> f64 {
        self.rate * (-self.rate * x).exp()
    }
    fn quantile(&self, p: f64) -> f64 {
        -(-p).ln_1p() / self.rate
    }
    fn sf(&self, x: f64) -> f64 {
        (-self.rate * x).exp()
    }
    fn isf(&self, q: f64) -> f64 {
        -q.ln() / self.rate
    }
}

/// The link families.
#[derive(Debug, Clone)]
pub enum LinkKind {
    /// tan((x − ½)π) on (0,1)
    TanProbit,
    /// −log(1 − x) on (0,1); image (0, ∞)
    NegLog1m,
    /// 1 − log(−log x) on (0,1)
    GumbelUnit,
    /// log(log(1/(1 − x)) + 1) on (0,1); image (0, ∞)
    LogLogComplement,
    /// log(x/(1 − x)) on (0,1)
    Logit,
    /// log(−log(1 − x)) on (0,1)
    Cloglog,
    /// log(x³/(1 − x³)) on (0,1)
    CubicLogit,
    /// log(x⁵/(1 − x⁵)) on (0,1)
    QuinticLogit,
    /// log x on (0, ∞)
    Log,
    /// x − 1/x on (0, ∞)
    XMinusInverse,
    /// (√(x/β) − √(β/x))/α on (0, ∞)
    BirnbaumSaunders { alpha: f64, beta: f64 },
    /// (2H(x) − 1)/(H(x)(1 − H(x))) for a host H with positive support
    CdfRatio(Arc<dyn HostDistribution>),
    /// a·xᵖ + b on ℝ, a > 0, p odd
    Poly { a: f64, b: f64, p: u32 },
    /// sinh x on ℝ
    Sinh,
    /// −log(1/F(x) − 1) for a host F with real support
    CdfLogit(Arc<dyn HostDistribution>),
}

/// A validated link function. Immutable once built.
#[derive(Debug, Clone)]
pub struct LinkSpec {
    kind: LinkKind,
}

impl PartialEq for LinkSpec {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// u + √(u² + c) without cancellation for negative u.
fn plus_hypot(u: f64, c: f64) -> f64 {
    let s = (u * u + c).sqrt();
    if u >= 0.0 {
        u + s
    } else {
        c / (s - u)
    }
}

impl LinkSpec {
    pub fn new(kind: LinkKind) -> Result<Self> {
        match &kind {
            LinkKind::BirnbaumSaunders { alpha, beta } => {
                if !(*alpha > 0.0 && alpha.is_finite() && *beta > 0.0 && beta.is_finite()) {
                    return Err(EgseError::Argument(format!(
                        "Birnbaum-Saunders link needs alpha > 0 and beta > 0, got ({alpha}, {beta})"
                    )));
                }
            }
            LinkKind::Poly { a, b, p } => {
                if !(*a > 0.0 && a.is_finite()) || !b.is_finite() {
                    return Err(EgseError::Argument(format!(
                        "poly link needs a > 0 and finite b, got a = {a}, b = {b}"
                    )));
                }
                if *p % 2 == 0 {
                    return Err(EgseError::Argument(format!(
                        "poly link exponent must be odd, got {p}"
                    )));
                }
            }
            LinkKind::CdfRatio(h) if h.support() != Domain::Positive => {
                return Err(EgseError::Argument(format!(
                    "CDF-ratio host must have positive support, {} does not",
                    h.token()
                )));
            }
            LinkKind::CdfLogit(h) if h.support() != Domain::Real => {
                return Err(EgseError::Argument(format!(
                    "CDF-logit host must have real support, {} does not",
                    h.token()
                )));
            }
            _ => {}
        }
        Ok(Self { kind })
    }

    pub fn logit() -> Self {
        Self { kind: LinkKind::Logit }
    }

    pub fn log() -> Self {
        Self { kind: LinkKind::Log }
    }

    /// The identity map on ℝ (poly with a = 1, b = 0, p = 1).
    pub fn identity() -> Self {
        Self {
            kind: LinkKind::Poly { a: 1.0, b: 0.0, p: 1 },
        }
    }

    pub fn kind(&self) -> &LinkKind {
        &self.kind
    }

    pub fn domain(&self) -> Domain {
        use LinkKind::*;
        match &self.kind {
            TanProbit | NegLog1m | GumbelUnit | LogLogComplement | Logit | Cloglog | CubicLogit
            | QuinticLogit => Domain::Unit,
            Log | XMinusInverse | BirnbaumSaunders { .. } | CdfRatio(_) => Domain::Positive,
            Poly { .. } | Sinh | CdfLogit(_) => Domain::Real,
        }
    }

    /// Image G(D). Two unit links only reach (0, ∞).
    pub fn image(&self) -> (f64, f64) {
        match &self.kind {
            LinkKind::NegLog1m | LinkKind::LogLogComplement => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// True when G is odd, i.e. G(−x) = −G(x) on a symmetric domain.
    pub fn is_odd(&self) -> bool {
        match self.kind {
            LinkKind::Sinh => true,
            LinkKind::Poly { b, .. } => b == 0.0,
            _ => false,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.domain().contains(x) {
            Ok(())
        } else {
            Err(EgseError::Domain {
                link: self.to_string(),
                value: x,
            })
        }
    }

    /// G(x).
    pub fn forward(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        use LinkKind::*;
        let v = match &self.kind {
            TanProbit => ((x - 0.5) * std::f64::consts::PI).tan(),
            NegLog1m => -(-x).ln_1p(),
            GumbelUnit => 1.0 - (-x.ln()).ln(),
            LogLogComplement => (-(-x).ln_1p()).ln_1p(),
            Logit => x.ln() - (-x).ln_1p(),
            Cloglog => (-(-x).ln_1p()).ln(),
            CubicLogit => 3.0 * x.ln() - (-(x * x * x)).ln_1p(),
            QuinticLogit => 5.0 * x.ln() - (-(x.powi(5))).ln_1p(),
            Log => x.ln(),
            XMinusInverse => x - 1.0 / x,
            BirnbaumSaunders { alpha, beta } => ((x / beta).sqrt() - (beta / x).sqrt()) / alpha,
            CdfRatio(h) => 1.0 / h.sf(x) - 1.0 / h.cdf(x),
            Poly { a, b, p } => a * x.powi(*p as i32) + b,
            Sinh => x.sinh(),
            CdfLogit(h) => h.cdf(x).ln() - h.sf(x).ln(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EgseError::Domain {
                link: self.to_string(),
                value: x,
            })
        }
    }

    /// G⁻¹(u), returned strictly inside the domain.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.image();
        if !u.is_finite() || u <= lo || u >= hi {
            return Err(EgseError::Domain {
                link: format!("inverse of {self}"),
                value: u,
            });
        }
        use LinkKind::*;
        let x = match &self.kind {
            TanProbit => 0.5 + u.atan() / std::f64::consts::PI,
            NegLog1m => -(-u).exp_m1(),
            GumbelUnit => (-(1.0 - u).exp()).exp(),
            LogLogComplement => -(-(u.exp_m1())).exp_m1(),
            Logit => logistic(u),
            Cloglog => -(-u.exp()).exp_m1(),
            CubicLogit => logistic(u).cbrt(),
            QuinticLogit => logistic(u).powf(0.2),
            Log => u.exp(),
            XMinusInverse => 0.5 * plus_hypot(u, 4.0),
            BirnbaumSaunders { alpha, beta } => {
                let r = plus_hypot(0.5 * alpha * u, 1.0);
                beta * r * r
            }
            CdfRatio(h) => {
                // (u + √(u²+4)) / (2 + u + √(u²+4)) and its complement
                let r = plus_hypot(u, 4.0);
                let p = r / (2.0 + r);
                if p > 0.5 {
                    h.isf(2.0 / (2.0 + r))
                } else {
                    h.quantile(p)
                }
            }
            Poly { a, b, p } => {
                let v = (u - b) / a;
                if *p == 1 {
                    v
                } else {
                    v.signum() * v.abs().powf(1.0 / *p as f64)
                }
            }
            Sinh => u.asinh(),
            CdfLogit(h) => {
                if u > 0.0 {
                    h.isf(logistic(-u))
                } else {
                    h.quantile(logistic(u))
                }
            }
        };
        Ok(self.domain().nudge_inside(x))
    }

    /// G′(x).
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        use LinkKind::*;
        let d = match &self.kind {
            TanProbit => {
                let s = (std::f64::consts::PI * x).sin();
                std::f64::consts::PI / (s * s)
            }
            NegLog1m => 1.0 / (1.0 - x),
            GumbelUnit => -1.0 / (x * x.ln()),
            LogLogComplement => 1.0 / ((1.0 - x) * (1.0 - (-x).ln_1p())),
            Logit => 1.0 / (x * (1.0 - x)),
            Cloglog => 1.0 / ((1.0 - x) * (-(-x).ln_1p())),
            CubicLogit => 3.0 / (x * (1.0 - x * x * x)),
            QuinticLogit => 5.0 / (x * (1.0 - x.powi(5))),
            Log => 1.0 / x,
            XMinusInverse => 1.0 + 1.0 / (x * x),
            BirnbaumSaunders { alpha, beta } => {
                ((x / beta).sqrt() + (beta / x).sqrt()) / (2.0 * alpha * x)
            }
            CdfRatio(h) => {
                let (c, s, d) = (h.cdf(x), h.sf(x), h.pdf(x));
                d / (s * s) + d / (c * c)
            }
            Poly { a, p, .. } => {
                if *p == 1 {
                    *a
                } else {
                    a * (*p as f64) * x.powi(*p as i32 - 1)
                }
            }
            Sinh => x.cosh(),
            CdfLogit(h) => h.pdf(x) / (h.cdf(x) * h.sf(x)),
        };
        Ok(d)
    }

    /// log G′(x).
    pub fn ln_derivative(&self, x: f64) -> Result<f64> {
        use LinkKind::*;
        match &self.kind {
            Logit => {
                self.check(x)?;
                Ok(-x.ln() - (-x).ln_1p())
            }
            Log => {
                self.check(x)?;
                Ok(-x.ln())
            }
            _ => Ok(self.derivative(x)?.ln()),
        }
    }
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LinkKind::*;
        match &self.kind {
            TanProbit => write!(f, "tanprobit"),
            NegLog1m => write!(f, "neglog1m"),
            GumbelUnit => write!(f, "gumbelunit"),
            LogLogComplement => write!(f, "loglogc"),
            Logit => write!(f, "logit"),
            Cloglog => write!(f, "cloglog"),
            CubicLogit => write!(f, "logitcube"),
            QuinticLogit => write!(f, "logitquint"),
            Log => write!(f, "log"),
            XMinusInverse => write!(f, "xminv"),
            BirnbaumSaunders { alpha, beta } => write!(f, "bs:{alpha},{beta}"),
            CdfRatio(h) => write!(f, "cdfratio:{}", h.token()),
            Poly { a, b, p } => write!(f, "poly:{a},{b},{p}"),
            Sinh => write!(f, "sinh"),
            CdfLogit(h) => write!(f, "cdflogit:{}", h.token()),
        }
    }
}

fn parse_numbers(s: &str, expected: usize, token: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == expected => Ok(v),
        _ => Err(EgseError::Argument(format!(
            "link `{token}` expects {expected} comma-separated numbers"
        ))),
    }
}

fn parse_host(s: &str) -> Result<Arc<dyn HostDistribution>> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    match (name, arg) {
        ("normal", None) => Ok(Arc::new(GaussianHost)),
        ("exp", None) => Ok(Arc::new(ExponentialHost { rate: 1.0 })),
        ("exp", Some(r)) => {
            let rate: f64 = r
                .parse()
                .map_err(|_| EgseError::Argument(format!("bad exponential rate `{r}`")))?;
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(EgseError::Argument(format!("exponential rate must be positive, got {rate}")));
            }
            Ok(Arc::new(ExponentialHost { rate }))
        }
        _ => Err(EgseError::Argument(format!("unknown host distribution `{s}`"))),
    }
}

impl serde::Serialize for LinkSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for LinkSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let token = String::deserialize(d)?;
        token.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for LinkSpec {
    type Err = EgseError;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let (head, args) = match token.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (token, None),
        };
        let kind = match (head, args) {
            ("tanprobit", None) => LinkKind::TanProbit,
            ("neglog1m", None) => LinkKind::NegLog1m,
            ("gumbelunit", None) => LinkKind::GumbelUnit,
            ("loglogc", None) => LinkKind::LogLogComplement,
            ("logit", None) => LinkKind::Logit,
            ("cloglog", None) => LinkKind::Cloglog,
            ("logitcube", None) => LinkKind::CubicLogit,
            ("logitquint", None) => LinkKind::QuinticLogit,
            ("log", None) => LinkKind::Log,
            ("xminv", None) => LinkKind::XMinusInverse,
            ("sinh", None) => LinkKind::Sinh,
            ("bs", Some(a)) => {
                let v = parse_numbers(a, 2, token)?;
                LinkKind::BirnbaumSaunders { alpha: v[0], beta: v[1] }
            }
            ("poly", Some(a)) => {
                let v = parse_numbers(a, 3, token)?;
                if v[2].fract() != 0.0 || v[2] < 1.0 {
                    return Err(EgseError::Argument(format!(
                        "poly exponent must be a positive odd integer, got {}",
                        v[2]
                    )));
                }
                LinkKind::Poly { a: v[0], b: v[1], p: v[2] as u32 }
            }
            ("cdfratio", Some(h)) => LinkKind::CdfRatio(parse_host(h)?),
            ("cdflogit", Some(h)) => LinkKind::CdfLogit(parse_host(h)?),
            _ => return Err(EgseError::Argument(format!("unknown link `{token}`"))),
        };
        LinkSpec::new(kind)
    }
}

/// Parses a comma-separated list where each element is a link token, e.g.
/// `logit,logit`. Parameterized tokens (`bs:1,2`) are separated by `;` when
/// they appear in a list.
pub fn parse_link_list(s: &str) -> Result<Vec<LinkSpec>> {
    if s.contains(';') {
        s.split(';').map(str::parse).collect()
    } else if s.contains(':') {
        // a single parameterized token, optionally repeated with `;`
        Ok(vec![s.parse()?])
    } else {
        s.split(',').map(str::parse).collect()
    }
}

pub fn eval_link(link: &LinkSpec, x: f64) -> Result<f64> {
    link.forward(x)
}

pub fn eval_inverse(link: &LinkSpec, u: f64) -> Result<f64> {
    link.inverse(u)
}

pub fn eval_deriv(link: &LinkSpec, x: f64) -> Result<f64> {
    link.derivative(x)
}

/// Every link family with representative parameters; used by tests and the
/// benchmark harness.
pub fn catalog() -> Vec<LinkSpec> {
    [
        "tanprobit",
        "neglog1m",
        "gumbelunit",
        "loglogc",
        "logit",
        "cloglog",
        "logitcube",
        "logitquint",
        "log",
        "xminv",
        "bs:0.5,2",
        "cdfratio:exp",
        "poly:2,1,3",
        "sinh",
        "cdflogit:normal",
    ]
    .iter()
    .map(|t| t.parse().expect("catalog tokens are valid"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid(domain: Domain, count: usize) -> Vec<f64> {
        (0..count)
            .map(|k| {
                let t = (k as f64 + 0.5) / count as f64;
                match domain {
                    Domain::Unit => t,
                    Domain::Positive => (10.0 * t - 5.0).exp(),
                    Domain::Real => 10.0 * t - 5.0,
                }
            })
            .collect()
    }

    #[test]
    fn spot_values() {
        let logit = LinkSpec::logit();
        assert_eq!(logit.forward(0.5).unwrap(), 0.0);
        assert_relative_eq!(logit.forward(0.8).unwrap(), 1.386_294_361_119_890_6, epsilon = 1e-12);
        assert_relative_eq!(logit.derivative(0.5).unwrap(), 4.0, epsilon = 1e-14);
        assert_eq!(logit.inverse(0.0).unwrap(), 0.5);

        let tan: LinkSpec = "tanprobit".parse().unwrap();
        assert!(tan.forward(0.5).unwrap().abs() < 1e-15);
        assert_relative_eq!(tan.derivative(0.5).unwrap(), PI, epsilon = 1e-14);

        assert_eq!(LinkSpec::log().inverse(0.0).unwrap(), 1.0);
        let cll: LinkSpec = "cloglog".parse().unwrap();
        assert_relative_eq!(cll.inverse(0.0).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn boundary_is_domain_error() {
        let logit = LinkSpec::logit();
        for x in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(logit.forward(x), Err(EgseError::Domain { .. })));
            assert!(logit.derivative(x).is_err());
        }
        assert!(LinkSpec::log().forward(0.0).is_err());
        assert!(logit.inverse(f64::INFINITY).is_err());
        assert!(logit.inverse(f64::NEG_INFINITY).is_err());
        let err = logit.forward(1.0).unwrap_err().to_string();
        assert!(err.contains("logit") && err.contains('1'));
    }

    #[test]
    fn inverse_stays_inside_domain() {
        let logit = LinkSpec::logit();
        let x = logit.inverse(60.0).unwrap();
        assert!(x < 1.0);
        assert!(LinkSpec::log().inverse(-800.0).unwrap() > 0.0);
    }

    #[test]
    fn round_trip_all_links() {
        for link in catalog() {
            for x in grid(link.domain(), 100) {
                let u = link.forward(x).unwrap();
                let back = link.inverse(u).unwrap();
                assert!(
                    (back - x).abs() <= 1e-10 * x.abs().max(1.0),
                    "{link}: x = {x}, back = {back}"
                );
            }
        }
    }

    #[test]
    fn monotone_and_positive_derivative() {
        for link in catalog() {
            let xs = grid(link.domain(), 200);
            let vals: Vec<f64> = xs.iter().map(|&x| link.forward(x).unwrap()).collect();
            for w in vals.windows(2) {
                assert!(w[1] > w[0], "{link} not increasing");
            }
            for &x in &xs {
                assert!(link.derivative(x).unwrap() > 0.0, "{link} G'({x}) <= 0");
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for link in catalog() {
            for x in grid(link.domain(), 40) {
                let step = h * x.abs().clamp(1e-2, 1.0);
                if !link.domain().contains(x - step) || !link.domain().contains(x + step) {
                    continue;
                }
                let fd = (link.forward(x + step).unwrap() - link.forward(x - step).unwrap()) / (2.0 * step);
                let an = link.derivative(x).unwrap();
                assert!(
                    ((fd - an) / an).abs() <= 1e-5,
                    "{link} at {x}: analytic {an}, fd {fd}"
                );
                assert_relative_eq!(link.ln_derivative(x).unwrap(), an.ln(), epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn half_line_images_reject_nonpositive() {
        let l: LinkSpec = "neglog1m".parse().unwrap();
        assert!(l.inverse(0.0).is_err());
        assert!(l.inverse(-1.0).is_err());
        assert!(l.inverse(0.3).is_ok());
    }

    #[test]
    fn parameter_validation() {
        assert!("bs:0,1".parse::<LinkSpec>().is_err());
        assert!("bs:1,-1".parse::<LinkSpec>().is_err());
        assert!("poly:1,0,2".parse::<LinkSpec>().is_err());
        assert!("poly:-1,0,3".parse::<LinkSpec>().is_err());
        assert!("poly:1,0,2.5".parse::<LinkSpec>().is_err());
        assert!("cdfratio:normal".parse::<LinkSpec>().is_err());
        assert!("cdflogit:exp".parse::<LinkSpec>().is_err());
        assert!("probit".parse::<LinkSpec>().is_err());
    }

    #[test]
    fn tokens_round_trip() {
        for link in catalog() {
            let again: LinkSpec = link.to_string().parse().unwrap();
            assert_eq!(again, link);
        }
        let list = parse_link_list("logit,cloglog").unwrap();
        assert_eq!(list.len(), 2);
        let list = parse_link_list("bs:1,2;poly:1,0,3").unwrap();
        assert_eq!(list[1].to_string(), "poly:1,0,3");
    }

    #[test]
    fn odd_links() {
        assert!("sinh".parse::<LinkSpec>().unwrap().is_odd());
        assert!("poly:1,0,3".parse::<LinkSpec>().unwrap().is_odd());
        assert!(!"poly:1,1,3".parse::<LinkSpec>().unwrap().is_odd());
        assert!(!LinkSpec::logit().is_odd());
    }
}
