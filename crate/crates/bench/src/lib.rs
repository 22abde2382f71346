//! Shared fixtures for the criterion benchmarks.

use egse::{sample_egse, Dataset, GeneratorKind, LinkSpec, Theta};

pub fn logit2() -> Vec<LinkSpec> {
    vec![LinkSpec::logit(), LinkSpec::logit()]
}

pub fn theta(kind: GeneratorKind) -> Theta {
    Theta::bivariate([0.3, -0.2], 0.8, 1.1, 0.4, [1.5, -1.0], 0.3, kind).expect("valid theta")
}

/// m draws from [`theta`] under logit links.
pub fn dataset(kind: GeneratorKind, m: usize, seed: u64) -> Dataset {
    let batch = sample_egse(&theta(kind), &logit2(), m, seed).expect("sampling succeeds");
    Dataset::from_rows(batch.rows().map(<[f64]>::to_vec).collect(), &logit2()).expect("draws lie in (0,1)")
}
