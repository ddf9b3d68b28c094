//! Microbenchmarks for the hot paths: sampling, loss gradients, quadrature,
//! and a small end-to-end fit.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dre_core::scoremodel::{ClassedSamples, ScoreFamily};
use dre_core::training::{fit_multiclass, BatchMode, OptimizerConfig};
use dre_core::{quadrature_kl_1d, rho_for_target_mi, DistributionSpec, ScoreSet};

fn bench_sampling(c: &mut Criterion) {
    let rho = rho_for_target_mi(20, 20.0).unwrap();
    let block = DistributionSpec::gaussian_block2x2(40, 0.0, rho);
    c.bench_function("sample_block2x2_dim40_10k", |b| {
        b.iter(|| black_box(block.sample(10_000, 7).unwrap()))
    });
    let cauchy = DistributionSpec::cauchy_1d(0.0, 1.0);
    c.bench_function("sample_cauchy_100k", |b| {
        b.iter(|| black_box(cauchy.sample(100_000, 7).unwrap()))
    });
}

fn bench_loss_gradient(c: &mut Criterion) {
    let rho = rho_for_target_mi(20, 20.0).unwrap();
    let p = DistributionSpec::gaussian_block2x2(40, 0.0, rho)
        .sample(512, 1)
        .unwrap();
    let q = DistributionSpec::gaussian_iso(40, 0.0, 1.0).sample(512, 2).unwrap();
    let data = ClassedSamples::from_class_matrices(&[p, q]).unwrap();
    let set = ScoreSet::new_quadratic(2, 40, vec![]).unwrap();
    c.bench_function("loss_gradient_dim40_batch1024", |b| {
        b.iter(|| black_box(set.loss_gradient(&data).unwrap()))
    });
}

fn bench_quadrature(c: &mut Criterion) {
    let p = DistributionSpec::gaussian_1d(-1.0, 0.08);
    let q = DistributionSpec::gaussian_1d(2.0, 0.15);
    c.bench_function("quadrature_kl_1d_gaussian", |b| {
        b.iter(|| black_box(quadrature_kl_1d(&p, &q, None).unwrap()))
    });
}

fn bench_small_fit(c: &mut Criterion) {
    let p = DistributionSpec::gaussian_1d(-1.0, 0.1).sample(2_000, 1).unwrap();
    let q = DistributionSpec::gaussian_1d(1.0, 0.2).sample(2_000, 2).unwrap();
    let m = DistributionSpec::cauchy_1d(0.0, 1.0).sample(2_000, 3).unwrap();
    let opt = OptimizerConfig {
        learning_rate: 0.02,
        epochs: 20,
        batch: BatchMode::Minibatch { size: 512 },
        ..OptimizerConfig::default()
    };
    c.bench_function("fit_multiclass_1d_3x2000_20epochs", |b| {
        b.iter(|| {
            black_box(
                fit_multiclass(
                    &[p.clone(), q.clone(), m.clone()],
                    &ScoreFamily::Quadratic,
                    None,
                    vec![],
                    &opt,
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_loss_gradient,
    bench_quadrature,
    bench_small_fit
);
criterion_main!(benches);
