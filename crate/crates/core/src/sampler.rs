//! Exact sampling from ESE and EGSE laws by selection: draw (Z, X) from the
//! (n+1)-dimensional elliptical law and keep X when λᵀ(X−μ) + τ > Z.
//!
//! Draws are produced in fixed-size chunks, each from its own ChaCha stream,
//! so the output for a given seed does not depend on the thread count.

use crate::density::Theta;
use crate::elliptical::{univariate_cdf, GeneratorKind};
use crate::error::{EgseError, Result};
use crate::links::LinkSpec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

const CHUNK: usize = 8192;
const WARN_ACCEPTANCE: f64 = 0.01;
const MIN_ACCEPTANCE: f64 = 1e-4;
const PROGRESS_WINDOW: u64 = 100_000;

/// Row-major m×n block of draws with rejection bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub dim: usize,
    pub accepted: usize,
    pub proposed: u64,
    pub seed: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.accepted
    }

    pub fn is_empty(&self) -> bool {
        self.accepted == 0
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed as f64
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of cell `cell`, derived from a base seed.
pub fn derive_seed(base: u64, cell: u64, rep: u64) -> u64 {
    mix(mix(mix(base) ^ cell.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ rep)
}

/// ChaCha8 generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// P(λᵀ(X−μ) + τ > Z) = F(τ/√(1+λᵀΣλ)).
pub fn acceptance_probability(theta: &Theta) -> f64 {
    univariate_cdf(theta.kind, theta.tau / (1.0 + theta.lambda_quad()).sqrt())
}

/// Draws one (Z, X − μ) pair. Student: shares the chi-square mixing variable.
struct JointDraw<'a> {
    lower: &'a DMatrix<f64>,
    chi: Option<ChiSquared<f64>>,
    nu: f64,
}

impl JointDraw<'_> {
    fn draw<R: Rng>(&self, rng: &mut R, u: &mut DVector<f64>, out: &mut DVector<f64>) -> f64 {
        let z0: f64 = rng.sample(StandardNormal);
        for v in u.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        out.gemv(1.0, self.lower, u, 0.0);
        match &self.chi {
            None => z0,
            Some(chi) => {
                let scale = (self.nu / chi.sample(rng)).sqrt();
                *out *= scale;
                z0 * scale
            }
        }
    }
}

fn check_request(theta: &Theta, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(EgseError::Argument("sample size must be at least 1".into()));
    }
    theta.validate()?;
    let p = acceptance_probability(theta);
    if p < MIN_ACCEPTANCE {
        return Err(EgseError::Progress(format!(
            "acceptance probability {p:.3e} is below {MIN_ACCEPTANCE:e}; increase tau"
        )));
    }
    if p < WARN_ACCEPTANCE {
        log::warn!("acceptance probability {p:.3e} is low; sampling will be slow");
    }
    Ok(p)
}

fn sample_chunk(theta: &Theta, draw: &JointDraw, count: usize, seed: u64, stream: u64, select: bool) -> Result<(Vec<f64>, u64)> {
    let n = theta.dim();
    let mut rng = stream_rng(seed, stream);
    let mut u = DVector::zeros(n);
    let mut d = DVector::zeros(n);
    let mut values = Vec::with_capacity(count * n);
    let mut proposed = 0u64;
    let mut accepted = 0usize;
    while accepted < count {
        let z = draw.draw(&mut rng, &mut u, &mut d);
        proposed += 1;
        if !select || theta.lambda.dot(&d) + theta.tau > z {
            values.extend(d.iter().zip(theta.mu.iter()).map(|(a, b)| a + b));
            accepted += 1;
        }
        if proposed.is_multiple_of(PROGRESS_WINDOW) && (accepted as f64) < MIN_ACCEPTANCE * proposed as f64 {
            return Err(EgseError::Progress(format!(
                "only {accepted} of {proposed} proposals accepted; increase tau"
            )));
        }
    }
    Ok((values, proposed))
}

fn run_chunks(theta: &Theta, m: usize, seed: u64, select: bool) -> Result<SampleBatch> {
    let lower = crate::elliptical::cholesky(&theta.sigma)?.l();
    let draw = JointDraw {
        lower: &lower,
        chi: match theta.kind {
            GeneratorKind::Gaussian => None,
            GeneratorKind::Student { nu } => Some(
                ChiSquared::new(nu).map_err(|e| EgseError::Argument(format!("chi-square: {e}")))?,
            ),
        },
        nu: theta.kind.nu(),
    };
    let chunks = m.div_ceil(CHUNK);
    let parts: Vec<Result<(Vec<f64>, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(m - c * CHUNK);
            sample_chunk(theta, &draw, count, seed, c as u64, select)
        })
        .collect();
    let mut values = Vec::with_capacity(m * theta.dim());
    let mut proposed = 0;
    for part in parts {
        let (v, p) = part?;
        values.extend(v);
        proposed += p;
    }
    Ok(SampleBatch {
        values,
        dim: theta.dim(),
        accepted: m,
        proposed,
        seed,
    })
}

/// m draws from ESE(θ).
pub fn sample_ese(theta: &Theta, m: usize, seed: u64) -> Result<SampleBatch> {
    check_request(theta, m)?;
    run_chunks(theta, m, seed, true)
}

/// m draws from EGSE(θ, links): ESE draws pushed through G⁻¹ coordinate-wise.
pub fn sample_egse(theta: &Theta, links: &[LinkSpec], m: usize, seed: u64) -> Result<SampleBatch> {
    if links.len() != theta.dim() {
        return Err(EgseError::Argument(format!(
            "{} links given for a {}-dimensional model",
            links.len(),
            theta.dim()
        )));
    }
    let mut batch = sample_ese(theta, m, seed)?;
    let n = batch.dim;
    batch
        .values
        .par_chunks_mut(n)
        .try_for_each(|row| -> Result<()> {
            for (v, link) in row.iter_mut().zip(links) {
                *v = link.inverse(*v)?;
            }
            Ok(())
        })?;
    Ok(batch)
}

/// m draws from the symmetric elliptical law with Theta's (μ, Σ).
pub fn sample_elliptical(theta: &Theta, m: usize, seed: u64) -> Result<SampleBatch> {
    if m == 0 {
        return Err(EgseError::Argument("sample size must be at least 1".into()));
    }
    theta.validate()?;
    run_chunks(theta, m, seed, false)
}
