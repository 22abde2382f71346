use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use egse::{fit_mle, loglik_gradient, FitOptions, GeneratorKind};
use egse_bench::{dataset, logit2, theta};

fn gradient(c: &mut Criterion) {
    let data = dataset(GeneratorKind::Gaussian, 2_000, 3);
    let t = theta(GeneratorKind::Gaussian);
    c.bench_function("loglik_gradient/normal/2000", |b| b.iter(|| loglik_gradient(&data, &t, &logit2()).unwrap()));
}

fn fit(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit_mle");
    g.sample_size(10);
    for m in [500, 2_000] {
        let data = dataset(GeneratorKind::Gaussian, m, 5);
        let opts = FitOptions {
            tau_fixed: Some(0.0),
            ..FitOptions::default()
        };
        g.bench_with_input(BenchmarkId::new("normal_tau0", m), &data, |b, d| {
            b.iter(|| fit_mle(d, &logit2(), GeneratorKind::Gaussian, &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, gradient, fit);
criterion_main!(benches);
