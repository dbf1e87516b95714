use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use optabc_bench::{embedded_points, forest_space};
use optabc_core::kmeans::{cluster, seed_population, DEFAULT_MAX_ITERS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_cluster(c: &mut Criterion) {
    let space = forest_space();
    let mut group = c.benchmark_group("kmeans/cluster");
    for &(pn, k) in &[(20usize, 2usize), (50, 5), (100, 10), (1000, 100)] {
        let points = embedded_points(&space, pn, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("pn{pn}_k{k}")), &points, |b, points| {
            b.iter(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                black_box(cluster(points, k, &mut rng, DEFAULT_MAX_ITERS).unwrap())
            })
        });
    }
    group.finish();
}

fn bench_seed_population(c: &mut Criterion) {
    let space = forest_space();
    c.bench_function("kmeans/seed_population/pn100_k10", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            black_box(seed_population(&space, 100, 10, &mut rng).unwrap())
        })
    });
}

criterion_group!(benches, bench_cluster, bench_seed_population);
criterion_main!(benches);
