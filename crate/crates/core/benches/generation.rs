use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssimqa::dataset::{synthesize_many, GenConfig};
use ssimqa::phantom::phantom_set;
use ssimqa::Execution;

fn generation(c: &mut Criterion) {
    let volumes = phantom_set(3, 128, 1);
    let cfg = GenConfig {
        target: 128,
        ..GenConfig::default()
    };
    let mut group = c.benchmark_group("synthesize_64");
    group.sample_size(10);
    let strategies = [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { workers: 0 }),
    ];
    for (name, exec) in strategies {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| synthesize_many(black_box(&volumes), 64, 7, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, generation);
criterion_main!(benches);
