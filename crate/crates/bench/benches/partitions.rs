use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multida::partitions::enumerate_exhaustive;
use multida::{PartitionSet, Scheme, VarianceMode};

fn bench_enumerate(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_exhaustive");
    for k in [4usize, 6, 8, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| enumerate_exhaustive(k).unwrap())
        });
    }
    group.finish();
}

fn bench_build(c: &mut Criterion) {
    c.bench_function("build_k8_exhaustive", |b| {
        b.iter(|| PartitionSet::build(8, Scheme::Exhaustive, None, VarianceMode::Unequal).unwrap())
    });
}

criterion_group!(benches, bench_enumerate, bench_build);
criterion_main!(benches);
