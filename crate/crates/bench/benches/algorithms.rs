use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slowflow::dataset::{generate_flows, FlowProfile};
use slowflow::evaluate::{ks_two_sample, tsne, TsneConfig};
use slowflow::models::{ModelKind, ModelParams, ModelSpec};
use slowflow::neighbors::{knn, standardize, Scope};
use slowflow::oversample::{adasyn, smote, smote_enn};
use slowflow::{Dataset, OversampleConfig};

fn flows(n: usize) -> Dataset {
    generate_flows(n, 0.25, 1, &FlowProfile::default()).unwrap()
}

fn neighbours(c: &mut Criterion) {
    let mut g = c.benchmark_group("knn");
    for n in [1_000, 4_000] {
        let view = standardize(&flows(n)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &view, |b, v| {
            b.iter(|| knn(v, black_box(7), 5, Scope::AllRows).unwrap())
        });
    }
    g.finish();
}

fn oversampling(c: &mut Criterion) {
    let ds = flows(2_000);
    let cfg = OversampleConfig::default();
    let mut g = c.benchmark_group("oversample_2000");
    g.sample_size(10);
    g.bench_function("smote", |b| b.iter(|| smote(&ds, &cfg, 0).unwrap()));
    g.bench_function("adasyn", |b| b.iter(|| adasyn(&ds, &cfg, 0).unwrap()));
    g.bench_function("smote_enn", |b| b.iter(|| smote_enn(&ds, &cfg, 0).unwrap()));
    g.finish();
}

fn classifiers(c: &mut Criterion) {
    let ds = flows(4_000);
    let mut g = c.benchmark_group("fit_4000");
    g.sample_size(10);
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(
            kind,
            ModelParams {
                n_trees: 20,
                ..ModelParams::default()
            },
        );
        g.bench_function(kind.to_string(), |b| b.iter(|| spec.fit(&ds, 0).unwrap()));
    }
    g.finish();
}

fn statistics(c: &mut Criterion) {
    let ds = flows(20_000);
    let (a, b) = (ds.column(0), ds.column(1));
    c.bench_function("ks_20000", |bench| {
        bench.iter(|| ks_two_sample(black_box(&a), black_box(&b)).unwrap())
    });

    let small = flows(300);
    let cfg = TsneConfig {
        iterations: 250,
        ..TsneConfig::default()
    };
    let mut g = c.benchmark_group("tsne_300");
    g.sample_size(10);
    g.bench_function("embed", |bench| {
        bench.iter(|| tsne(small.features(), small.labels(), &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, neighbours, oversampling, classifiers, statistics);
criterion_main!(benches);
