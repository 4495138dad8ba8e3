use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use recfosm::distributions::weibull_from_mean_cov;
use recfosm::reciprocal::{
    auto_moments, reciprocal_moments_quadrature, sampled_reciprocal_moments,
};
use recfosm_bench::{height_dist, modulus_height_input, stiffness_dist};

fn bench_reciprocal(c: &mut Criterion) {
    let ratio = stiffness_dist();
    let skewed = height_dist();
    let joint = modulus_height_input();

    c.bench_function("moments_analytic_pair", |b| {
        b.iter(|| auto_moments(black_box(&ratio)).unwrap())
    });
    c.bench_function("moments_quadrature", |b| {
        b.iter(|| reciprocal_moments_quadrature(black_box(&skewed)).unwrap())
    });
    c.bench_function("moments_sampled_10k", |b| {
        b.iter(|| sampled_reciprocal_moments(black_box(&joint), 10_000, 1).unwrap())
    });
    c.bench_function("weibull_fit", |b| {
        b.iter(|| weibull_from_mean_cov(black_box(30.0), black_box(0.1)).unwrap())
    });
    c.bench_function("sample_10k", |b| {
        b.iter(|| black_box(&skewed).sample(10_000, 1))
    });
}

criterion_group!(reciprocal, bench_reciprocal);
criterion_main!(reciprocal);
