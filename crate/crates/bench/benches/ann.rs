use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use patsig_bench::workload;
use patsig_core::{brute_force_knn, ForestParams, RpForest};

fn query(c: &mut Criterion) {
    let (store, queries) = workload(64);
    let forest = RpForest::build(&store, &ForestParams::default()).unwrap();
    let mut g = c.benchmark_group("knn_k10");
    let mut i = 0;
    g.bench_function("forest", |b| {
        b.iter(|| {
            i = (i + 1) % queries.len();
            black_box(forest.query(&queries[i], 10, None).unwrap())
        })
    });
    g.bench_function("forest_breadth_x4", |b| {
        b.iter(|| {
            i = (i + 1) % queries.len();
            black_box(forest.query(&queries[i], 10, Some(4000)).unwrap())
        })
    });
    g.bench_function("brute_force", |b| {
        b.iter(|| {
            i = (i + 1) % queries.len();
            black_box(brute_force_knn(&store, &queries[i], 10).unwrap())
        })
    });
    g.finish();
}

fn build(c: &mut Criterion) {
    let (store, _) = workload(0);
    let mut g = c.benchmark_group("forest_build");
    g.sample_size(10);
    for trees in [10, 100] {
        let params = ForestParams { n_trees: trees, ..ForestParams::default() };
        g.bench_function(format!("{trees}_trees"), |b| {
            b.iter_batched(
                || params.clone(),
                |p| black_box(RpForest::build(&store, &p).unwrap()),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, query, build);
criterion_main!(benches);
