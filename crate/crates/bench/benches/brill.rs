use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tagmark_bench::synthetic_corpus;
use tagmark_core::taggers::brill_train;
use tagmark_core::Tagger;

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("brill_train");
    group.sample_size(10);
    for n in [200, 1000] {
        let train = synthetic_corpus(3, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &train, |b, train| {
            b.iter(|| brill_train(train, 2, 50).unwrap())
        });
    }
    group.finish();
}

fn tagging(c: &mut Criterion) {
    let model = brill_train(&synthetic_corpus(3, 1000), 2, 50).unwrap();
    let test = synthetic_corpus(4, 200);
    c.bench_function("brill_tag", |b| b.iter(|| model.tag_sentences(&test)));
}

criterion_group!(benches, training, tagging);
criterion_main!(benches);
