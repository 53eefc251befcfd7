use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tbrf_core::classifier::{train, SvmHyperparams};
use tbrf_core::config::Config;
use tbrf_core::encoder::encode_document;
use tbrf_core::pipeline::{analyze, prepare};
use tbrf_core::synth::{corpus_dataset, generate_corpus, generate_document, SynthOptions};

fn encode(c: &mut Criterion) {
    let cfg = Config::default();
    let doc = generate_document("bench", 1, &SynthOptions::default()).doc;
    c.bench_function("encode_document", |b| b.iter(|| encode_document(black_box(&doc), &cfg.encoder).unwrap()));
}

fn training(c: &mut Criterion) {
    let cfg = Config::default();
    let corpus = generate_corpus("bench", 10, 1000, &SynthOptions::default());
    let data = corpus_dataset(&corpus, &cfg.encoder).unwrap();
    let hp = SvmHyperparams::default();
    let mut g = c.benchmark_group("train");
    g.sample_size(10);
    g.bench_function("ten_documents", |b| b.iter(|| train(black_box(&data), &hp, 0).unwrap()));
    g.finish();
}

fn detection(c: &mut Criterion) {
    let cfg = Config::default();
    let corpus = generate_corpus("bench", 10, 1000, &SynthOptions::default());
    let model = train(&corpus_dataset(&corpus, &cfg.encoder).unwrap(), &SvmHyperparams::default(), 0).unwrap();
    let (doc, _) = prepare(generate_document("bench-test", 7, &SynthOptions::default()).doc, &cfg).unwrap();
    c.bench_function("analyze_document", |b| b.iter(|| analyze(black_box(&doc), &model, &cfg).unwrap()));
}

criterion_group!(benches, encode, training, detection);
criterion_main!(benches);
