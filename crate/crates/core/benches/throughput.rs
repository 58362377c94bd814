//! Throughput benchmarks for the data-parallel hot paths. The benchmark names
//! carry the active mode, so running once with the default features and once
//! with `--no-default-features` produces directly comparable entries:
//!
//! ```text
//! cargo bench -p pairspec-core
//! cargo bench -p pairspec-core --no-default-features
//! ```

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use pairspec_core::eval::harness::{
    compute_corpus_maps, stage1_attempt_stats, BinarizationMode, ImpostorPolicy,
};
use pairspec_core::minutiae::{generate_corpus, generate_finger, NoiseModel};
use pairspec_core::pipeline::{
    estimate_corpus_stats, select_reliable, EnrollMethod, EnrollmentPolicy,
};
use pairspec_core::spectral::{spectral_xtheta, SpectralGrid, SpectralKind};
use pairspec_core::zlhds::{tradeoff_curve, QuantizerConfig};

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn bench_spectral_transform(c: &mut Criterion) {
    let grid = SpectralGrid::default_grid(2.3);
    let set = generate_finger(35.0, 500.0, 500.0, 7).unwrap();
    c.benchmark_group("spectral_transform")
        .bench_function(MODE, |b| {
            b.iter(|| spectral_xtheta(black_box(&set), black_box(&grid)).unwrap())
        });
}

fn bench_tradeoff_monte_carlo(c: &mut Criterion) {
    c.benchmark_group("tradeoff_monte_carlo")
        .sample_size(20)
        .bench_function(MODE, |b| {
            b.iter(|| tradeoff_curve(2, black_box(&[0.45]), 100_000, 5).unwrap())
        });
}

fn bench_corpus_attempts(c: &mut Criterion) {
    let grid = SpectralGrid::default_grid(3.2);
    let noise = NoiseModel::default_synthetic(0);
    let corpus = generate_corpus(12, 4, 35.0, 500.0, 500.0, &noise, 1.0, 3).unwrap();
    let kinds = vec![SpectralKind::XTheta];
    let stats = estimate_corpus_stats(&corpus, &grid, &kinds).unwrap();
    let maps = compute_corpus_maps(&corpus, &grid, &kinds).unwrap();
    let config = QuantizerConfig::equiprobable(2).unwrap();
    let selection = select_reliable(&stats, 512).unwrap();
    let policy = EnrollmentPolicy {
        method: EnrollMethod::E1,
        t: 1,
        kinds,
    };
    c.benchmark_group("stage1_attempt_sweep")
        .sample_size(20)
        .bench_function(MODE, |b| {
            b.iter(|| {
                stage1_attempt_stats(
                    black_box(&maps),
                    &stats,
                    &config,
                    &policy,
                    &selection,
                    BinarizationMode::Zlhds,
                    ImpostorPolicy::AllVsAll,
                )
                .unwrap()
            })
        });
}

criterion_group!(
    benches,
    bench_spectral_transform,
    bench_tradeoff_monte_carlo,
    bench_corpus_attempts
);
criterion_main!(benches);
