//! Shared fixtures for the benchmarks.

use dyson_core::{nystrom_decompose, Interval, KernelSpec, SpectralDecomposition};

/// Sine kernel at unit density on `[-3, 3]`.
pub fn sine_decomposition(n_nodes: usize) -> SpectralDecomposition {
    let k = KernelSpec::sine(1.0).build().expect("sine kernel");
    nystrom_decompose(&k, Interval::new(-3.0, 3.0), n_nodes).expect("sine spectrum")
}

/// Product kernel with exponent `alpha` on `[-1, 1]`.
pub fn product_decomposition(alpha: f64, n_nodes: usize) -> SpectralDecomposition {
    let k = KernelSpec::product(alpha).build().expect("product kernel");
    nystrom_decompose(&k, Interval::new(-1.0, 1.0), n_nodes).expect("product spectrum")
}

/// `n` evenly spaced points in `[-1, 1]`.
pub fn ladder(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect()
}
