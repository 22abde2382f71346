//! Reading and writing parameter files.
//!
//! A parameter file is either a bare theta object, bivariate
//! `{mu, sigma1, sigma2, rho, lambda, tau, nu?}` or general
//! `{mu, sigma: [[..]], lambda, tau, nu?}`, or a fit file whose `theta`
//! field holds one.

use anyhow::{anyhow, bail, Context};
use egse::{to_identifiable, GeneratorKind, LinkSpec, Theta};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaDoc {
    mu: Vec<f64>,
    sigma: Option<Vec<Vec<f64>>>,
    sigma1: Option<f64>,
    sigma2: Option<f64>,
    rho: Option<f64>,
    lambda: Option<Vec<f64>>,
    #[serde(default)]
    tau: f64,
    nu: Option<f64>,
}

/// Everything a parameter file may carry.
pub struct ParamFile {
    pub theta: Theta,
    pub links: Option<Vec<LinkSpec>>,
    pub columns: Option<Vec<String>>,
}

fn sigma_matrix(doc: &ThetaDoc) -> anyhow::Result<DMatrix<f64>> {
    let n = doc.mu.len();
    if let Some(rows) = &doc.sigma {
        if doc.sigma1.is_some() || doc.sigma2.is_some() || doc.rho.is_some() {
            bail!("give either `sigma` or `sigma1`/`sigma2`/`rho`, not both");
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            bail!("`sigma` must be a {n}x{n} matrix");
        }
        return Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
    }
    match (n, doc.sigma1, doc.sigma2) {
        (1, Some(s), None) => Ok(DMatrix::from_element(1, 1, s * s)),
        (2, Some(s1), Some(s2)) => {
            let c = doc.rho.unwrap_or(0.0) * s1 * s2;
            Ok(DMatrix::from_row_slice(2, 2, &[s1 * s1, c, c, s2 * s2]))
        }
        _ => bail!("a {n}-dimensional theta needs `sigma` as a matrix"),
    }
}

/// Resolves the generator: an explicit flag wins, then `nu` in the file.
pub fn resolve_kind(flag: Option<&str>, nu: Option<f64>) -> anyhow::Result<GeneratorKind> {
    Ok(match (flag, nu) {
        (Some(token), _) => token.parse()?,
        (None, Some(nu)) => GeneratorKind::student(nu)?,
        (None, None) => GeneratorKind::Gaussian,
    })
}

pub fn parse_param_file(text: &str, generator: Option<&str>) -> anyhow::Result<ParamFile> {
    let value: Value = serde_json::from_str(text).context("parameter file is not valid JSON")?;
    let (theta_value, outer) = match value.get("theta") {
        Some(t) => (t.clone(), Some(&value)),
        None => (value.clone(), None),
    };
    let doc: ThetaDoc = serde_json::from_value(theta_value).context("bad theta object")?;
    let n = doc.mu.len();
    if n == 0 {
        bail!("`mu` is empty");
    }
    let sigma = sigma_matrix(&doc)?;
    let lambda = doc.lambda.clone().unwrap_or_else(|| vec![0.0; n]);
    if lambda.len() != n {
        bail!("`lambda` has {} entries, `mu` has {n}", lambda.len());
    }
    let kind = resolve_kind(generator, doc.nu)?;
    let theta = Theta::new(DVector::from_vec(doc.mu), sigma, DVector::from_vec(lambda), doc.tau, kind)?;
    let links = match outer.and_then(|o| o.get("links")) {
        Some(v) => Some(serde_json::from_value::<Vec<LinkSpec>>(v.clone()).context("bad `links` field")?),
        None => None,
    };
    let columns = match outer.and_then(|o| o.get("columns")) {
        Some(v) => Some(serde_json::from_value::<Vec<String>>(v.clone()).context("bad `columns` field")?),
        None => None,
    };
    Ok(ParamFile { theta, links, columns })
}

pub fn read_param_file(path: &Path, generator: Option<&str>) -> anyhow::Result<ParamFile> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow!("cannot read {}: {e}", path.display()))?;
    parse_param_file(&text, generator).with_context(|| format!("in {}", path.display()))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn theta_json(theta: &Theta) -> Value {
    let mu: Vec<f64> = theta.mu.iter().copied().collect();
    let lambda: Vec<f64> = theta.lambda.iter().copied().collect();
    let mut v = if theta.dim() == 2 {
        json!({
            "mu": mu,
            "sigma1": theta.scale(0),
            "sigma2": theta.scale(1),
            "rho": theta.correlation(0, 1),
            "lambda": lambda,
            "tau": theta.tau,
        })
    } else {
        json!({ "mu": mu, "sigma": matrix_rows(&theta.sigma), "lambda": lambda, "tau": theta.tau })
    };
    if let GeneratorKind::Student { nu } = theta.kind {
        v["nu"] = json!(nu);
    }
    v
}

pub fn psi_json(theta: &Theta) -> anyhow::Result<Value> {
    let psi = to_identifiable(theta)?;
    Ok(json!({
        "mu": psi.mu.iter().collect::<Vec<_>>(),
        "sigma_star": matrix_rows(&psi.sigma_star),
        "omega": psi.omega.iter().collect::<Vec<_>>(),
        "delta": psi.delta.iter().collect::<Vec<_>>(),
        "gamma": psi.gamma,
    }))
}
