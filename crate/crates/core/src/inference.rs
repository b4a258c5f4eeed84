//! Goodness-of-fit tests and interval estimates used to check Monte Carlo
//! output against exact laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Outcome of a hypothesis test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestOutcome {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(TestOutcome {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(TestOutcome {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Pearson chi-square goodness of fit of integer counts against a pmf.
///
/// Cells with expected count below 5 are pooled with their neighbours
/// (scanning from both tails toward the mode).
pub fn chi_square_counts(observed: &[u64], pmf: &[f64]) -> Result<TestOutcome> {
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::EmptyBatch);
    }
    let len = observed.len().max(pmf.len());
    let obs = |i: usize| observed.get(i).copied().unwrap_or(0) as f64;
    let exp = |i: usize| pmf.get(i).copied().unwrap_or(0.0) * total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for i in 0..len {
        o += obs(i);
        e += exp(i);
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    // Remaining upper tail folds into the last cell.
    let tail_mass = 1.0 - pmf.iter().sum::<f64>();
    e += tail_mass.max(0.0) * total as f64;
    match cells.last_mut() {
        Some(last) => {
            last.0 += o;
            last.1 += e;
        }
        None => cells.push((o, e)),
    }
    if cells.len() < 2 {
        return Ok(TestOutcome {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((cells.len() - 1) as f64).map_err(|_| Error::EmptyBatch)?;
    Ok(TestOutcome {
        statistic: stat,
        p_value: dist.sf(stat),
    })
}

/// Law of a sum of independent Bernoulli(p_i): `pmf[k] = P[sum = k]`.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &m) in pmf.iter().enumerate() {
            next[k] += m * (1.0 - p);
            next[k + 1] += m * p;
        }
        pmf = next;
    }
    // Long tails of negligible eigenvalues add nothing visible.
    while pmf.len() > 1 && *pmf.last().unwrap() < 1e-300 {
        pmf.pop();
    }
    pmf
}

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and batch-means standard error with `n_batches` contiguous batches.
pub fn batch_means(values: &[f64], n_batches: usize) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let b = n_batches.clamp(1, values.len());
    if b < 2 {
        return Ok((mean_sd(values).0, 0.0));
    }
    let len = values.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| {
            let end = if i + 1 == b { values.len() } else { (i + 1) * len };
            let chunk = &values[i * len..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (_, sd) = mean_sd(&means);
    Ok((mean, sd / (b as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_table() {
        // Classical critical values: P[K > 1.358] = 0.05, P[K > 1.628] = 0.01.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_same_sample() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let t = ks_two_sample(&a, &a).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(t.passes(0.01));
    }

    #[test]
    fn ks_detects_shift() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        assert!(!ks_two_sample(&a, &b).unwrap().passes(0.01));
        let u = ks_one_sample(&a, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(u.statistic <= 1.0 / 500.0 + 1e-12);
    }

    #[test]
    fn poisson_binomial_moments() {
        let p = [0.9, 0.5, 0.2, 0.01];
        let pmf = poisson_binomial_pmf(&p);
        let mean: f64 = pmf.iter().enumerate().map(|(k, m)| k as f64 * m).sum();
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((mean - 1.61).abs() < 1e-14);
        assert!((pmf[0] - 0.1 * 0.5 * 0.8 * 0.99).abs() < 1e-15);
    }

    #[test]
    fn chi_square_exact_counts_pass() {
        let pmf = [0.25, 0.5, 0.25];
        let t = chi_square_counts(&[250, 500, 250], &pmf).unwrap();
        assert_eq!(t.statistic, 0.0);
        let bad = chi_square_counts(&[500, 250, 250], &pmf).unwrap();
        assert!(!bad.passes(0.01));
    }

    #[test]
    fn clopper_pearson_brackets() {
        let (lo, hi) = clopper_pearson(0, 1000, 0.95);
        assert_eq!(lo, 0.0);
        // Rule of three: upper bound ~ 3.69/n for zero successes.
        assert!((hi - 0.003682).abs() < 2e-5);
        let (lo, hi) = clopper_pearson(400, 1000, 0.95);
        assert!(lo < 0.4 && 0.4 < hi);
    }

    #[test]
    fn batch_means_constant() {
        let (m, se) = batch_means(&[2.0; 40], 10).unwrap();
        assert_eq!((m, se), (2.0, 0.0));
        assert!(batch_means(&[], 10).is_err());
    }
}
