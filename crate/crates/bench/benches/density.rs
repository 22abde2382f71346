use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use egse::{egse_logpdf, loglikelihood, sample_egse, GeneratorKind};
use egse_bench::{dataset, logit2, theta};
use std::hint::black_box;

const KINDS: [(&str, GeneratorKind); 2] = [("normal", GeneratorKind::Gaussian), ("student5", GeneratorKind::Student { nu: 5.0 })];

fn pointwise(c: &mut Criterion) {
    let mut g = c.benchmark_group("egse_logpdf");
    for (name, kind) in KINDS {
        let t = theta(kind);
        let prepared = t.prepare().unwrap();
        let links = logit2();
        g.bench_function(BenchmarkId::new("unprepared", name), |b| {
            b.iter(|| egse_logpdf(black_box(&[0.4, 0.6]), &t, &links).unwrap())
        });
        g.bench_function(BenchmarkId::new("prepared", name), |b| {
            b.iter(|| prepared.egse_logpdf(black_box(&[0.4, 0.6]), &links).unwrap())
        });
    }
    g.finish();
}

fn loglik(c: &mut Criterion) {
    let mut g = c.benchmark_group("loglikelihood");
    for m in [1_000, 10_000] {
        for (name, kind) in KINDS {
            let data = dataset(kind, m, 1);
            let t = theta(kind);
            g.bench_with_input(BenchmarkId::new(name, m), &data, |b, d| b.iter(|| loglikelihood(d, &t, &logit2()).unwrap()));
        }
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_egse");
    for (name, kind) in KINDS {
        let t = theta(kind);
        g.bench_function(BenchmarkId::new(name, 10_000), |b| b.iter(|| sample_egse(&t, &logit2(), 10_000, black_box(7)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, pointwise, loglik, sampling);
criterion_main!(benches);
