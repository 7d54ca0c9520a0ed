use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use frameless::precision::{closed_form_precision, oracle_precision, theta_limit_gain, ThetaDerivativeSpec};
use frameless::report::{sweep_theta, Spacing, SweepConfig, ThetaGrid, ThetaRule};
use frameless::{NoiseModel, ProbeSpec, Scheme};

fn closed_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_form");
    let noise = NoiseModel::new(0.95).unwrap();
    for scheme in Scheme::ALL {
        group.bench_function(BenchmarkId::new("oat_n100", scheme.name()), |b| {
            let spec = ProbeSpec::Oat { n: 100 };
            b.iter(|| closed_form_precision(&spec, scheme, black_box(0.01), noise, ThetaDerivativeSpec::Analytic))
        });
    }
    group.bench_function("limit_oat_n1000", |b| {
        let spec = ProbeSpec::Oat { n: 1000 };
        b.iter(|| theta_limit_gain(black_box(&spec), Scheme::TwoCopy, NoiseModel::noiseless()))
    });
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let cfg = SweepConfig {
        scheme: Scheme::TwoCopy,
        model: ProbeSpec::Oat { n: 100 },
        grid: Some(ThetaGrid::new(1e-4, 0.1, 1000, Spacing::Log).unwrap()),
        n_values: vec![100],
        theta_rule: ThetaRule::InverseN,
        p: 0.95,
        seed: None,
    };
    c.bench_function("sweep_theta_1000_points", |b| b.iter(|| sweep_theta(black_box(&cfg)).unwrap()));
}

fn dense_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_oracle");
    group.sample_size(10);
    for n in [2usize, 3, 4] {
        group.bench_with_input(BenchmarkId::new("two_copy_oat", n), &n, |b, &n| {
            let spec = ProbeSpec::Oat { n };
            b.iter(|| oracle_precision(&spec, Scheme::TwoCopy, 0.3, NoiseModel::noiseless()).unwrap())
        });
    }
    group.bench_function("four_copy_oat_n2", |b| {
        let spec = ProbeSpec::Oat { n: 2 };
        b.iter(|| oracle_precision(&spec, Scheme::FourCopy, 0.3, NoiseModel::noiseless()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, closed_form, sweep, dense_oracle);
criterion_main!(benches);
