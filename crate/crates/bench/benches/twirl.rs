use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use frameless::linalg::{pauli, Axis};
use frameless::twirl::{haar_mc_twirl, mc_moment_tensor, HaarSampler};

fn sampler(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar");
    for count in [1024usize, 16384] {
        group.throughput(Throughput::Elements(count as u64));
        group.bench_with_input(BenchmarkId::new("unitaries_d2", count), &count, |b, &count| {
            let s = HaarSampler::new(1, 0);
            b.iter(|| s.unitaries(2, count))
        });
    }
    group.finish();
}

fn twirl(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_twirl");
    group.sample_size(10);
    let z = pauli(Axis::Z);
    let s = HaarSampler::new(2024, 0);
    for k in [2usize, 4] {
        group.bench_with_input(BenchmarkId::new("sigma_z_10k", k), &k, |b, &k| {
            b.iter(|| haar_mc_twirl(&z, k, &s, 10_000, false, 1).unwrap())
        });
    }
    group.bench_function("moment_tensor_10k", |b| b.iter(|| mc_moment_tensor(&s, 10_000).unwrap()));
    group.finish();
}

criterion_group!(benches, sampler, twirl);
criterion_main!(benches);
