use std::f64::consts::PI;

use crate::error::{ensure, Result};
use crate::geometry::Interval;

/// Gauss–Legendre rule on an interval: nodes ascending, weights positive.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize, window: Interval) -> Result<Self> {
        ensure(n >= 1, "n_nodes", n as f64, "must be at least 1")?;
        let (std_nodes, std_weights) = legendre_rule(n);
        let half = 0.5 * window.length();
        let mid = 0.5 * (window.lo + window.hi);
        Ok(Self {
            nodes: std_nodes.iter().map(|t| mid + half * t).collect(),
            weights: std_weights.iter().map(|w| half * w).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_length() {
        for n in [1, 2, 7, 64, 256, 513] {
            let rule = GaussLegendre::new(n, Interval::new(-3.0, 3.0)).unwrap();
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 6.0).abs() < 1e-12, "n={n}: {s}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials() {
        // An n-point rule integrates degree 2n-1 exactly.
        let rule = GaussLegendre::new(5, Interval::new(0.0, 2.0)).unwrap();
        let v = rule.integrate(|x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn smooth_integrand() {
        let rule = GaussLegendre::new(40, Interval::new(-1.0, 1.0)).unwrap();
        let v = rule.integrate(|x| (-x * x).exp());
        // sqrt(pi) * erf(1)
        assert!((v - 1.493_648_265_624_854).abs() < 1e-14);
    }
}
