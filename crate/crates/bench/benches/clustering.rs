use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use crashdedup_bench::blob_points;
use crashdedup_core::hdbscan::{build_mst, condense, extract_hybrid, EpsilonSweep};
use crashdedup_core::search::{cluster_search, dbcv, SearchParams};

fn bench_mst(c: &mut Criterion) {
    let mut group = c.benchmark_group("mst");
    for &n in &[100usize, 300, 600] {
        let points = blob_points(n, 64, 5, 42);
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, points| {
            b.iter(|| build_mst(black_box(points), 1).unwrap());
        });
    }
    group.finish();
}

fn bench_extract(c: &mut Criterion) {
    let points = blob_points(300, 64, 5, 42);
    let mst = build_mst(&points, 1).unwrap();
    let hierarchy = condense(&mst, 2).unwrap();
    let mid = mst.edges[mst.edges.len() / 2].weight;
    c.bench_function("extract_hybrid_300", |b| {
        b.iter(|| extract_hybrid(black_box(&hierarchy), black_box(mid)));
    });
    c.bench_function("epsilon_sweep_300", |b| {
        b.iter(|| EpsilonSweep::new(black_box(&hierarchy)));
    });
}

fn bench_dbcv(c: &mut Criterion) {
    let points = blob_points(200, 64, 4, 7);
    let labels: Vec<Option<usize>> = (0..200).map(|i| Some(i % 4)).collect();
    c.bench_function("dbcv_200", |b| {
        b.iter(|| dbcv(black_box(&points), black_box(&labels)));
    });
}

fn bench_search(c: &mut Criterion) {
    let points = blob_points(200, 64, 4, 99);
    let mst = build_mst(&points, 1).unwrap();
    let hierarchy = condense(&mst, 2).unwrap();
    c.bench_function("cluster_search_200", |b| {
        b.iter(|| {
            cluster_search(
                black_box(&points),
                black_box(&hierarchy),
                &SearchParams::default(),
            )
        });
    });
}

criterion_group!(benches, bench_mst, bench_extract, bench_dbcv, bench_search);
criterion_main!(benches);
