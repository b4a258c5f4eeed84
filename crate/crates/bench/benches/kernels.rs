use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dyson_bench::{product_decomposition, sine_decomposition};
use dyson_core::statistics::{sigma_fredholm, sigma_series, SeriesOptions};
use dyson_core::{nystrom_decompose, Interval, KernelSpec};

fn nystrom(c: &mut Criterion) {
    let mut g = c.benchmark_group("nystrom");
    for spec in [KernelSpec::sine(1.0), KernelSpec::airy(), KernelSpec::product(0.5)] {
        let k = spec.build().unwrap();
        for n in [64, 128, 256] {
            g.bench_with_input(BenchmarkId::new(spec.family.clone(), n), &n, |b, &n| {
                b.iter(|| nystrom_decompose(&k, Interval::new(-3.0, 3.0), n).unwrap())
            });
        }
    }
    g.finish();
}

fn densities(c: &mut Criterion) {
    let d = product_decomposition(0.5, 64);
    c.bench_function("sigma_fredholm/n2", |b| {
        b.iter(|| sigma_fredholm(&d, black_box(&[-0.2, 0.3])).unwrap())
    });
    let opts = SeriesOptions {
        qmc_points: 20_000,
        ..SeriesOptions::default()
    };
    c.bench_function("sigma_series/k4", |b| {
        b.iter(|| sigma_series(&d, black_box(&[0.1]), 4, &opts).unwrap())
    });
    let s = sine_decomposition(128);
    c.bench_function("fredholm_det/sine128", |b| b.iter(|| s.fredholm_det().unwrap()));
}

criterion_group!(benches, nystrom, densities);
criterion_main!(benches);
