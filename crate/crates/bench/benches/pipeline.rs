use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fakenews_bench::{random_docs, random_matrix};
use fakenews_core::models::{fit_logreg, LogRegParams};
use fakenews_core::outlier::{fit_isolation_forest, IsoForestParams};
use fakenews_core::vectorize::{build_vocab, tfidf_vectorize};
use std::hint::black_box;

fn tfidf(c: &mut Criterion) {
    let mut group = c.benchmark_group("tfidf");
    for n in [200, 1000] {
        let docs = random_docs(1, n, 200, 5000);
        let vocab = build_vocab(&docs, 2000).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &docs, |b, docs| {
            b.iter(|| tfidf_vectorize(black_box(docs), &vocab).unwrap())
        });
    }
    group.finish();
}

fn isoforest(c: &mut Criterion) {
    let x = random_matrix(2, 2000, 50);
    c.bench_function("isolation_forest/2000x50", |b| {
        b.iter(|| fit_isolation_forest(black_box(&x), &IsoForestParams::default()).unwrap())
    });
}

fn logreg(c: &mut Criterion) {
    let x = random_matrix(3, 1000, 100);
    let params = LogRegParams {
        epochs: 50,
        ..Default::default()
    };
    c.bench_function("logreg/1000x100/50_epochs", |b| {
        b.iter(|| fit_logreg(black_box(&x), &params).unwrap())
    });
}

criterion_group!(benches, tfidf, isoforest, logreg);
criterion_main!(benches);
