//! Monte Carlo recovery study: relative bias and RMSE of the MLE across
//! sample sizes and correlations.

use crate::data_io::{format_sig17, Dataset};
use crate::density::Theta;
use crate::elliptical::GeneratorKind;
use crate::error::{EgseError, Result};
use crate::fit::{fit_mle, Chart, FitOptions};
use crate::links::LinkSpec;
use crate::sampler::{derive_seed, sample_egse};
use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StudyScenario {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
    pub lambda: [f64; 2],
    pub tau: f64,
    pub kind: GeneratorKind,
    pub links: Vec<LinkSpec>,
    pub sample_sizes: Vec<usize>,
    pub rho_values: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    /// Use only the moment-based start in each replication.
    pub single_start: bool,
}

impl Default for StudyScenario {
    fn default() -> Self {
        Self {
            mu: [1.0, 1.0],
            sigma: [1.0, 1.0],
            lambda: [0.5, 0.6],
            tau: 0.5,
            kind: GeneratorKind::Gaussian,
            links: vec![LinkSpec::new(crate::links::LinkKind::TanProbit).expect("valid link"); 2],
            sample_sizes: vec![200, 500, 1000, 2000],
            rho_values: vec![0.10, 0.25, 0.50, 0.75, 0.90],
            replications: 100,
            base_seed: 2024,
            single_start: false,
        }
    }
}

impl StudyScenario {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(EgseError::Argument("a study needs at least 2 replications".into()));
        }
        if let Some(&m) = self.sample_sizes.iter().find(|&&m| m < 50) {
            return Err(EgseError::Argument(format!("sample sizes must be at least 50, got {m}")));
        }
        if self.sample_sizes.is_empty() || self.rho_values.is_empty() {
            return Err(EgseError::Argument("sample sizes and rho values must be nonempty".into()));
        }
        if self.links.len() != 2 {
            return Err(EgseError::Argument(format!("a study needs 2 links, got {}", self.links.len())));
        }
        Ok(())
    }

    pub fn true_theta(&self, rho: f64) -> Result<Theta> {
        Theta::bivariate(self.mu, self.sigma[0], self.sigma[1], rho, self.lambda, self.tau, self.kind)
    }
}

/// Aggregates for one (size, ρ, parameter) cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StudyCell {
    pub size: usize,
    pub rho: f64,
    pub param: String,
    pub truth: f64,
    /// Mean of |(θ̂ − θ)/θ|; NaN when the cell is invalid or θ = 0.
    pub rb: f64,
    pub rmse: f64,
    /// Mean of θ̂ − θ.
    pub bias: f64,
    pub failures: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StudyReport {
    pub cells: Vec<StudyCell>,
}

impl StudyReport {
    /// RB averaged over the parameters of one (size, ρ) cell.
    pub fn mean_rb(&self, size: usize, rho: f64) -> Option<f64> {
        let rbs: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.size == size && c.rho == rho && c.valid)
            .map(|c| c.rb)
            .collect();
        (!rbs.is_empty()).then(|| rbs.iter().sum::<f64>() / rbs.len() as f64)
    }

    /// CSV with columns size, rho, param, rb, rmse, failures.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["size", "rho", "param", "rb", "rmse", "failures"])?;
        for c in &self.cells {
            w.write_record([
                c.size.to_string(),
                format_sig17(c.rho),
                c.param.clone(),
                format_sig17(c.rb),
                format_sig17(c.rmse),
                c.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-parameter (RB, RMSE, signed bias) of a set of estimates.
pub fn aggregate(truth: &[f64], estimates: &[Vec<f64>]) -> Vec<(f64, f64, f64)> {
    let n = estimates.len() as f64;
    truth
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let errs = estimates.iter().map(|e| e[k] - t);
            let rb = errs.clone().map(|d| (d / t).abs()).sum::<f64>() / n;
            let rmse = (errs.clone().map(|d| d * d).sum::<f64>() / n).sqrt();
            let bias = errs.sum::<f64>() / n;
            (rb, rmse, bias)
        })
        .collect()
}

fn replicate(scenario: &StudyScenario, theta: &Theta, m: usize, seed: u64, chart: &Chart, opts: &FitOptions) -> Option<Vec<f64>> {
    let batch = sample_egse(theta, &scenario.links, m, seed).ok()?;
    let data = Dataset::from_rows(batch.rows().map(<[f64]>::to_vec).collect(), &scenario.links).ok()?;
    let fit = fit_mle(&data, &scenario.links, scenario.kind, opts).ok()?;
    (fit.converged && fit.std_errors.is_some()).then(|| chart.reported(&fit.theta_hat))
}

/// Runs every (size, ρ) cell.
///
/// A replication fails when the optimizer does not converge or the observed
/// information at the optimum is not positive definite, which is how fits
/// drifting to λ, τ → ±∞ show up. Replication r of cell c uses the seed
/// `derive_seed(base_seed, c, r)`, so the report does not depend on scheduling.
pub fn run_study(scenario: &StudyScenario) -> Result<StudyReport> {
    scenario.validate()?;
    let chart = Chart {
        n: 2,
        kind: scenario.kind,
        tau_fixed: None,
    };
    let opts = FitOptions {
        multi_start: !scenario.single_start,
        ..FitOptions::default()
    };
    let names = chart.param_names();
    let mut jobs = Vec::new();
    for (si, &m) in scenario.sample_sizes.iter().enumerate() {
        for (ri, &rho) in scenario.rho_values.iter().enumerate() {
            jobs.push((si * scenario.rho_values.len() + ri, m, rho));
        }
    }
    let thetas: Vec<Theta> = jobs.iter().map(|j| scenario.true_theta(j.2)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..jobs.len()).flat_map(|c| (0..scenario.replications).map(move |r| (c, r))).collect();
    let outcomes: Vec<Option<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let (cell, m, _) = jobs[c];
            replicate(scenario, &thetas[c], m, derive_seed(scenario.base_seed, cell as u64, r as u64), &chart, &opts)
        })
        .collect();

    let mut cells = Vec::new();
    for (c, &(_, m, rho)) in jobs.iter().enumerate() {
        let runs = &outcomes[c * scenario.replications..(c + 1) * scenario.replications];
        let ok: Vec<Vec<f64>> = runs.iter().flatten().cloned().collect();
        let failures = runs.len() - ok.len();
        let truth = chart.reported(&thetas[c]);
        if failures > 0 {
            log::warn!("size {m}, rho {rho}: {failures} replications failed");
        }
        let stats = if ok.is_empty() {
            vec![(f64::NAN, f64::NAN, f64::NAN); truth.len()]
        } else {
            aggregate(&truth, &ok)
        };
        for ((name, &t), (rb, rmse, bias)) in names.iter().zip(&truth).zip(stats) {
            cells.push(StudyCell {
                size: m,
                rho,
                param: name.clone(),
                truth: t,
                rb: if t == 0.0 { f64::NAN } else { rb },
                rmse,
                bias,
                failures,
                valid: !ok.is_empty() && t != 0.0,
            });
        }
    }
    Ok(StudyReport { cells })
}
