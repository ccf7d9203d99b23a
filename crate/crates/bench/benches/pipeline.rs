use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vitd_bench::{corpus, label_pairs};
use vitd_core::augment::{build_combined_dataset, AugmentConfig, MockTranslator, TranslationCache, TranslationContext};
use vitd_core::cascade::{predict_cascade, train_cascade, CascadeConfig};
use vitd_core::eval::macro_f1;
use vitd_core::models::{train_logreg, train_svm, TrainConfig};
use vitd_core::textproc::{TfidfConfig, TfidfModel};

fn tfidf(c: &mut Criterion) {
    let ds = corpus(2000, 30);
    let texts = ds.texts();
    let cfg = TfidfConfig::default();
    c.bench_function("tfidf_fit_2000", |b| b.iter(|| TfidfModel::fit(black_box(&texts), &cfg).unwrap()));
    let model = TfidfModel::fit(&texts, &cfg).unwrap();
    c.bench_function("tfidf_transform_2000", |b| b.iter(|| model.transform_all(black_box(&texts))));
}

fn linear(c: &mut Criterion) {
    let ds = corpus(600, 20);
    let texts = ds.texts();
    let vec = TfidfModel::fit(&texts, &TfidfConfig::default()).unwrap();
    let xs = vec.transform_all(&texts);
    let ys = ds.label_codes().unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        tolerance: 0.0,
        ..Default::default()
    };
    let mut group = c.benchmark_group("train_600x50");
    group.sample_size(10);
    group.bench_function("logreg", |b| b.iter(|| train_logreg(black_box(&xs), &ys, &cfg).unwrap()));
    group.bench_function("svm", |b| b.iter(|| train_svm(black_box(&xs), &ys, &cfg).unwrap()));
    group.finish();
}

fn cascade(c: &mut Criterion) {
    let train = corpus(600, 20);
    let model = train_cascade(&train, &CascadeConfig::default()).unwrap();
    let test = corpus(1000, 25);
    c.bench_function("cascade_predict_1000", |b| {
        b.iter(|| predict_cascade(&model, black_box(test.examples())).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("macro_f1");
    for n in [100, 10_000] {
        let (gold, pred) = label_pairs(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| macro_f1(black_box(&gold), black_box(&pred), &[0, 1, 2]).unwrap())
        });
    }
    group.finish();
}

fn augmentation(c: &mut Criterion) {
    let ds = corpus(300, 15);
    let mut group = c.benchmark_group("augment_300_mock");
    group.sample_size(10);
    for workers in [1, 4] {
        let cfg = AugmentConfig {
            max_concurrency: workers,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(workers), &cfg, |b, cfg| {
            b.iter(|| {
                let mock = MockTranslator::marker();
                let cache = TranslationCache::in_memory();
                let ctx = TranslationContext::new(&mock, &cache);
                build_combined_dataset(black_box(&ds), cfg, &ctx).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, tfidf, linear, cascade, metrics, augmentation);
criterion_main!(benches);
