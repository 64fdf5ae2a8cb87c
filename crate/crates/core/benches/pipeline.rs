use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use relsvm_core::classifier::train_ovr_with;
use relsvm_core::evaluation::cross_validate_with;
use relsvm_core::featurizer::{vectorize_all, LabelMode};
use relsvm_core::pipeline::resource_dims;
use relsvm_core::synth::{SynthConfig, SyntheticCorpus};
use relsvm_core::{CvConfig, Execution, Families, FeatureSpace, TrainConfig};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus() -> SyntheticCorpus {
    SyntheticCorpus::generate(&SynthConfig {
        instances: 1583,
        labels: 11,
        filler_vocab: 5000,
        entity_vocab: 600,
        cues_per_label: 20,
        embed_dim: 300,
        num_clusters: 1000,
        seed: 3,
        ..SynthConfig::default()
    })
}

fn bench(c: &mut Criterion) {
    let corpus = corpus();
    let families = Families::default();
    let (embed_dim, num_clusters) = resource_dims(families, &corpus.resources);
    let space = FeatureSpace::build(&corpus.instances, &[], families, embed_dim, num_clusters).unwrap();
    let vectors = vectorize_all(
        &corpus.instances,
        &space,
        &corpus.resources,
        LabelMode::Train,
        Execution::Sequential,
    )
    .unwrap();

    let mut group = c.benchmark_group("vectorize");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| vectorize_all(black_box(&corpus.instances), &space, &corpus.resources, LabelMode::Train, exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("train_ovr");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train_ovr_with(black_box(&vectors), &space, &TrainConfig::default(), exec).unwrap())
        });
    }
    group.finish();

    let small = SyntheticCorpus::generate(&SynthConfig {
        instances: 1000,
        seed: 3,
        ..SynthConfig::default()
    });
    let mut group = c.benchmark_group("cross_validate");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cross_validate_with(black_box(&small.instances), &CvConfig::default(), &small.resources, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
