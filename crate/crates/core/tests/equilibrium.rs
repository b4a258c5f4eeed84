//! End-to-end checks across modules: samplers feed the dynamics and the
//! estimators, and the results are compared with exact quantities.

use dyson_core::dynamics::{DriftSpec, IntegratorOptions};
use dyson_core::inference::ks_two_sample;
use dyson_core::sampler::{confinement, log_gas_density};
use dyson_core::statistics::{estimate_correlation, CorrelationGrid};
use dyson_core::{integrate_sde, nystrom_decompose, sample_dpp, sample_log_gas, Interval, KernelSpec, RngStream};

#[test]
fn dyson_dynamics_preserve_the_log_gas() {
    let n = 4;
    let drift = DriftSpec::Dyson {
        lambda: confinement(n, 1.0),
    };
    let opts = IntegratorOptions::default();
    let paths = 400u64;
    let mut moved = Vec::new();
    let mut fresh = Vec::new();
    for p in 0..paths {
        let init = sample_log_gas(n, 1.0, RngStream::new(3, p)).unwrap();
        let t = integrate_sde(&init, &drift, 1.0, 1e-9, RngStream::new(4, p), &opts).unwrap();
        moved.push(t.states.last().unwrap().coords()[0]);
        fresh.push(sample_log_gas(n, 1.0, RngStream::new(5, p)).unwrap().coords()[0]);
    }
    let t = ks_two_sample(&moved, &fresh).unwrap();
    assert!(t.passes(0.01), "{t:?}");
}

#[test]
fn log_gas_one_point_density_near_origin() {
    let n = 6;
    let h = 0.5;
    let draws = 40_000u64;
    let counts: usize = (0..draws)
        .map(|s| sample_log_gas(n, 1.0, RngStream::new(8, s)).unwrap().count_in(-h, h))
        .sum();
    let got = counts as f64 / (draws as f64 * 2.0 * h);
    let lambda = confinement(n, 1.0);
    let steps = 400;
    let exact = (0..steps)
        .map(|k| log_gas_density(n, lambda, -h + 2.0 * h * (k as f64 + 0.5) / steps as f64))
        .sum::<f64>()
        / steps as f64;
    assert!((got - exact).abs() < 0.01, "{got} vs {exact}");
}

#[test]
fn windowed_sine_samples_have_unit_density() {
    let k = KernelSpec::sine(1.0).build().unwrap();
    let d = nystrom_decompose(&k, Interval::new(-2.0, 2.0), 96).unwrap();
    let samples: Vec<_> = (0..4000).map(|s| sample_dpp(&d, RngStream::new(17, s)).unwrap()).collect();
    let bins = (0..8).map(|i| Interval::new(-2.0 + 0.5 * i as f64, -1.5 + 0.5 * i as f64)).collect();
    let est = estimate_correlation(&samples, &CorrelationGrid::Single(bins)).unwrap();
    for (v, se) in est.values.iter().zip(&est.std_errors) {
        assert!((v - 1.0).abs() < 4.0 * se, "{v} +- {se}");
    }
}
