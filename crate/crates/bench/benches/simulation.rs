use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use dyson_bench::{ladder, product_decomposition, sine_decomposition};
use dyson_core::capacity::{pair_energy, Variant};
use dyson_core::dynamics::{dyson_drift, DensityField, DriftSpec, IntegratorOptions};
use dyson_core::sampler::sample_log_gas;
use dyson_core::{integrate_sde, sample_dpp, Configuration, Interval, Region, RngStream};

fn sampling(c: &mut Criterion) {
    let d = sine_decomposition(128);
    let mut i = 0u64;
    c.bench_function("sample_dpp/sine", |b| {
        b.iter(|| {
            i += 1;
            sample_dpp(&d, RngStream::new(1, i)).unwrap()
        })
    });
    for n in [8, 32] {
        c.bench_function(&format!("sample_log_gas/N{n}"), |b| {
            b.iter(|| {
                i += 1;
                sample_log_gas(n, 1.0, RngStream::new(2, i)).unwrap()
            })
        });
    }
}

fn drifts(c: &mut Criterion) {
    let x = ladder(32);
    c.bench_function("dyson_drift/N32", |b| b.iter(|| dyson_drift(black_box(&x), 0.15).unwrap()));
    let field = DensityField::new(Arc::new(product_decomposition(0.5, 64))).unwrap();
    c.bench_function("distorted_drift/n2", |b| b.iter(|| field.drift(black_box(&[-0.2, 0.3]), 1e-3).unwrap()));
    let init = Configuration::on_line(ladder(8), Region::whole_line());
    let drift = DriftSpec::Dyson { lambda: 0.6 };
    c.bench_function("integrate_sde/dyson8_t0.1", |b| {
        b.iter(|| integrate_sde(&init, &drift, 0.1, 1e-3, RngStream::new(3, 0), &IntegratorOptions::default()).unwrap())
    });
}

fn energy(c: &mut Criterion) {
    let d = sine_decomposition(128);
    let config = sample_dpp(&d, RngStream::new(4, 0)).unwrap();
    let inner = Region::from(Interval::new(-2.0, 2.0));
    c.bench_function("pair_energy/sine", |b| {
        b.iter(|| pair_energy(black_box(&config), 1e-3, &inner, Variant::Log).unwrap())
    });
}

criterion_group!(benches, sampling, drifts, energy);
criterion_main!(benches);
