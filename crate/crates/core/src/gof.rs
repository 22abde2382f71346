//! Quantile residuals and goodness-of-fit tests against N(0, 1).

use crate::data_io::Dataset;
use crate::density::Theta;
use crate::error::{EgseError, Result};
use crate::links::LinkSpec;
use crate::marginals::{conditional_params, est1_tails, marginal_params};
use crate::special::{normal_cdf, normal_quantile};
use rayon::prelude::*;

const CDF_CLAMP: f64 = 1e-12;
const MIN_SAMPLE: usize = 5;

/// Residuals of a fitted model, one pair per observation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Residuals {
    /// Φ⁻¹ of the marginal CDF of the first coordinate.
    pub first: Vec<f64>,
    /// Φ⁻¹ of the conditional CDF of the second coordinate given the first,
    /// or of its marginal CDF when `marginal_only` is set. Empty for n = 1.
    pub second: Vec<f64>,
    /// CDF values clamped into (1e−12, 1 − 1e−12).
    pub clamped: usize,
    pub marginal_only: bool,
}

impl Residuals {
    /// Both coordinates pooled into one sample.
    pub fn pooled(&self) -> Vec<f64> {
        self.first.iter().chain(&self.second).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub ad_stat: f64,
    pub ad_pvalue: f64,
    pub clamped: usize,
    pub seed: u64,
}

/// First residual, its clamp flag, and the second pair when n = 2.
type Scored = (f64, bool, Option<(f64, bool)>);

/// Normal score from the two tail probabilities, clamped away from 0 and 1.
fn normal_score((lower, upper): (f64, f64)) -> (f64, bool) {
    if lower <= upper {
        let p = lower.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
        (normal_quantile(p), p != lower)
    } else {
        let p = upper.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
        (-normal_quantile(p), p != upper)
    }
}

/// Rosenblatt residuals for a univariate or bivariate model.
///
/// The data are continuous, so no randomization is needed; `seed` is kept in
/// the signature for links with atoms.
pub fn quantile_residuals(data: &Dataset, theta: &Theta, links: &[LinkSpec], seed: u64, marginal_only: bool) -> Result<Residuals> {
    let _ = seed;
    let n = theta.dim();
    if n > 2 {
        return Err(EgseError::Unsupported(format!("quantile residuals need n ≤ 2, got n = {n}")));
    }
    if data.ncols() != n {
        return Err(EgseError::Argument(format!("{} data columns for a {n}-dimensional model", data.ncols())));
    }
    data.check_links(links)?;
    let m1 = marginal_params(theta, 0)?;
    let m2 = if n == 2 { Some(marginal_params(theta, 1)?) } else { None };
    let rows: Vec<&[f64]> = data.rows().collect();
    let scored: Vec<Result<Scored>> = rows
        .par_iter()
        .map(|row| {
            let w1 = links[0].forward(row[0])?;
            let (r1, c1) = normal_score(est1_tails(w1, &m1)?);
            let second = if n == 2 {
                let w2 = links[1].forward(row[1])?;
                let p = if marginal_only {
                    m2.expect("bivariate")
                } else {
                    conditional_params(theta, 0, 1, w1)?
                };
                Some(normal_score(est1_tails(w2, &p)?))
            } else {
                None
            };
            Ok((r1, c1, second))
        })
        .collect();
    let mut out = Residuals {
        first: Vec::with_capacity(rows.len()),
        second: Vec::new(),
        clamped: 0,
        marginal_only,
    };
    for s in scored {
        let (r1, c1, second) = s?;
        out.first.push(r1);
        out.clamped += usize::from(c1);
        if let Some((r2, c2)) = second {
            out.second.push(r2);
            out.clamped += usize::from(c2);
        }
    }
    if out.clamped > 0 {
        log::warn!("{} residual CDF values were clamped into (1e-12, 1 - 1e-12)", out.clamped);
    }
    Ok(out)
}

/// Residuals pooled and tested with KS and AD.
pub fn residual_report(data: &Dataset, theta: &Theta, links: &[LinkSpec], seed: u64, marginal_only: bool) -> Result<ResidualReport> {
    let r = quantile_residuals(data, theta, links, seed, marginal_only)?;
    let pooled = r.pooled();
    let (ks_stat, ks_pvalue) = ks_test(&pooled)?;
    let (ad_stat, ad_pvalue) = ad_test(&pooled)?;
    Ok(ResidualReport {
        residuals: pooled,
        ks_stat,
        ks_pvalue,
        ad_stat,
        ad_pvalue,
        clamped: r.clamped,
        seed,
    })
}

fn sorted_checked(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.len() < MIN_SAMPLE {
        return Err(EgseError::Argument(format!(
            "goodness-of-fit tests need at least {MIN_SAMPLE} values, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(EgseError::Argument("sample contains NaN".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let cdf: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum::<f64>() * (2.0 * std::f64::consts::PI).sqrt() / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let sf: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * x * x).exp()
            })
            .sum::<f64>()
            * 2.0;
        sf.clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov test against N(0, 1), with the asymptotic
/// p-value at Stephens' effective size.
pub fn ks_test(sample: &[f64]) -> Result<(f64, f64)> {
    let s = sorted_checked(sample)?;
    let m = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max);
    let en = m.sqrt();
    Ok((d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)))
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let a = sorted_checked(a)?;
    let b = sorted_checked(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    Ok((d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)))
}

/// Asymptotic CDF of the Anderson–Darling statistic (Marsaglia & Marsaglia).
fn ad_inf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp()).exp()
    }
}

/// One-sample Anderson–Darling test against a fully specified N(0, 1).
pub fn ad_test(sample: &[f64]) -> Result<(f64, f64)> {
    let s = sorted_checked(sample)?;
    let m = s.len();
    let ln_cdf = |x: f64| normal_cdf(x).max(f64::MIN_POSITIVE).ln();
    let sum: f64 = (0..m)
        .map(|i| (2 * i + 1) as f64 * (ln_cdf(s[i]) + ln_cdf(-s[m - 1 - i])))
        .sum();
    let a2 = -(m as f64) - sum / m as f64;
    Ok((a2, (1.0 - ad_inf(a2)).clamp(0.0, 1.0)))
}

/// (Φ⁻¹((i − ½)/m), x₍ᵢ₎) pairs for a normal QQ plot.
pub fn qq_points(sample: &[f64]) -> Result<Vec<(f64, f64)>> {
    if sample.is_empty() {
        return Err(EgseError::Argument("QQ plot of an empty sample".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    Ok(s.into_iter()
        .enumerate()
        .map(|(i, x)| (normal_quantile((i as f64 + 0.5) / m), x))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptical::GeneratorKind;
    use crate::sampler::sample_egse;

    fn normal_grid(m: usize) -> Vec<f64> {
        (0..m).map(|i| normal_quantile((i as f64 + 0.5) / m as f64)).collect()
    }

    #[test]
    fn perfect_grid_passes() {
        let g = normal_grid(10_000);
        let (d, p) = ks_test(&g).unwrap();
        assert!(d <= 0.01 && p >= 0.99);
        let (_, p) = ad_test(&g).unwrap();
        assert!(p >= 0.99);
        for (t, e) in qq_points(&g).unwrap() {
            assert!((t - e).abs() < 1e-9);
        }
    }

    #[test]
    fn power_against_shift_and_cauchy() {
        let shifted: Vec<f64> = normal_grid(1000).iter().map(|x| x + 1.0).collect();
        assert!(ks_test(&shifted).unwrap().1 < 1e-6);
        let cauchy: Vec<f64> = (0..1000)
            .map(|i| (std::f64::consts::PI * ((i as f64 + 0.5) / 1000.0 - 0.5)).tan())
            .collect();
        assert!(ad_test(&cauchy).unwrap().1 < 1e-6);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // scipy.special.kolmogorov
        assert!((kolmogorov_sf(1.0) - 0.26999967167735456).abs() < 1e-10);
        assert!((kolmogorov_sf(0.5) - 0.9639452436648751).abs() < 1e-10);
        assert!((kolmogorov_sf(1.5) - 0.022217962616525127).abs() < 1e-10);
    }

    #[test]
    fn ad_reference_value() {
        // 5% critical value of the case-0 statistic
        assert!((1.0 - ad_inf(2.492) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn order_invariance_and_small_samples() {
        let mut g = normal_grid(50);
        g[3] += 0.7;
        let mut r = g.clone();
        r.reverse();
        assert_eq!(ks_test(&g).unwrap(), ks_test(&r).unwrap());
        assert_eq!(ad_test(&g).unwrap(), ad_test(&r).unwrap());
        assert!(ks_test(&g[..4]).is_err());
        assert_eq!(qq_points(&[2.5]).unwrap(), vec![(0.0, 2.5)]);
        let sym = qq_points(&[-2.0, -0.5, 0.5, 2.0]).unwrap();
        assert_eq!(sym[0].0, -sym[3].0);
        assert_eq!(sym[0].1, -sym[3].1);
    }

    #[test]
    fn symmetric_identity_case_is_standardization() {
        let theta = Theta::bivariate([0.5, -1.0], 2.0, 0.5, 0.0, [0.0, 0.0], 0.0, GeneratorKind::Gaussian).unwrap();
        let links = vec![LinkSpec::identity(), LinkSpec::identity()];
        let data = Dataset::from_rows(vec![vec![1.5, -1.25], vec![-3.5, 0.0], vec![0.5, -1.0]], &links).unwrap();
        let r = quantile_residuals(&data, &theta, &links, 0, false).unwrap();
        for (k, row) in data.rows().enumerate() {
            assert!((r.first[k] - (row[0] - 0.5) / 2.0).abs() < 1e-7);
            assert!((r.second[k] - (row[1] + 1.0) / 0.5).abs() < 1e-7);
        }
        assert_eq!(r.clamped, 0);
    }

    #[test]
    fn residuals_under_true_model() {
        let theta = Theta::bivariate([-1.0, 0.2], 0.9, 1.1, -0.5, [1.0, -2.0], 0.4, GeneratorKind::Student { nu: 5.0 }).unwrap();
        let links = vec![LinkSpec::logit(), LinkSpec::logit()];
        let b = sample_egse(&theta, &links, 2000, 11).unwrap();
        let data = Dataset::from_rows(b.rows().map(<[f64]>::to_vec).collect(), &links).unwrap();
        let rep = residual_report(&data, &theta, &links, 1, false).unwrap();
        assert!(rep.ks_pvalue > 0.01, "{}", rep.ks_pvalue);
        assert_eq!(rep.clamped, 0);
        assert_eq!(rep, residual_report(&data, &theta, &links, 99, false).unwrap().with_seed(1));
    }

    impl ResidualReport {
        fn with_seed(mut self, seed: u64) -> Self {
            self.seed = seed;
            self
        }
    }
}
