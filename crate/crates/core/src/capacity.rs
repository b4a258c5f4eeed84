//! Cut-off test functions of pair distances and the Monte Carlo Dirichlet
//! energy of the pair-sum `g_eps = sum_{i != j} h(x_i - x_j)`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{Interval, Region};
use crate::inference::batch_means;
use crate::quadrature::GaussLegendre;
use crate::rng::RngStream;
use crate::sampler::{restrict, sample_dpp, sample_poisson, Configuration};
use crate::spectral::SpectralDecomposition;
use crate::statistics::{csv_err, N_BATCHES};

/// Relative distance to a kink below which the inner-side derivative is used.
const KINK_TOL: f64 = 4.0 * f64::EPSILON;

/// `2` on `|t| <= eps`, `2 log|t| / log eps` on `eps < |t| < 1`, `0` beyond.
pub fn h_eps(t: f64, eps: f64) -> f64 {
    let a = t.abs();
    if a <= eps {
        2.0
    } else if a >= 1.0 {
        0.0
    } else {
        2.0 * a.ln() / eps.ln()
    }
}

/// `2` on `|t| <= eps`, `4 - 2|t| / eps` on `eps < |t| < 2 eps`, `0` beyond.
pub fn h_lin(t: f64, eps: f64) -> f64 {
    let a = t.abs();
    if a <= eps {
        2.0
    } else if a >= 2.0 * eps {
        0.0
    } else {
        4.0 - 2.0 * a / eps
    }
}

/// Which cut-off profile builds the test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// [`h_eps`], active on `eps < r < 1`.
    Log,
    /// [`h_lin`], active on `eps < r < 2 eps`.
    Linear,
}

impl Variant {
    pub fn value(self, r: f64, eps: f64) -> f64 {
        match self {
            Self::Log => h_eps(r, eps),
            Self::Linear => h_lin(r, eps),
        }
    }

    fn outer(self, eps: f64) -> f64 {
        match self {
            Self::Log => 1.0,
            Self::Linear => 2.0 * eps,
        }
    }

    /// Radial derivative `h'(r)` for `r >= 0`, a.e.; at the kinks the value
    /// from the side nearer the origin is used.
    pub fn radial_derivative(self, r: f64, eps: f64) -> f64 {
        let outer = self.outer(eps);
        let near_inner = (r - eps).abs() <= KINK_TOL * eps;
        let near_outer = (r - outer).abs() <= KINK_TOL * outer;
        if near_inner || near_outer {
            log::debug!("pair distance {r} on a kink of the cut-off; using inner-side derivative");
        }
        if r <= eps || near_inner || (r >= outer && !near_outer) {
            return 0.0;
        }
        match self {
            Self::Log => 2.0 / (r * eps.ln()),
            Self::Linear => -2.0 / eps,
        }
    }
}

/// Value and energy density of the pair-sum test function on one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEnergy {
    /// `(1/2) sum_i |d_i g|^2` with `d_i g = sum_{j != i} h'(|x_i - x_j|) e_ij`.
    pub energy_density: f64,
    /// `sum_{i != j} h(x_i - x_j)` over points of the inner window.
    pub g_value: f64,
    /// Ordered pairs with distance in the active annulus.
    pub active_pairs: usize,
}

/// Pair-sum test function restricted to `inner_window`.
pub fn pair_energy(
    config: &Configuration,
    eps: f64,
    inner_window: &Region,
    variant: Variant,
) -> Result<PairEnergy> {
    ensure(eps > 0.0, "eps", eps, "must be positive")?;
    if variant == Variant::Log {
        ensure(eps < 1.0, "eps", eps, "must be below 1 for the log cut-off")?;
    }
    let inner = restrict(config, inner_window);
    let dim = inner.dim();
    let pts: Vec<&[f64]> = inner.points().collect();
    let n = pts.len();
    let mut grad = vec![0.0; n * dim];
    let mut g_value = 0.0;
    let mut active_pairs = 0;
    let reach = variant.outer(eps);
    for i in 0..n {
        for j in i + 1..n {
            let diff: Vec<f64> = pts[i].iter().zip(pts[j]).map(|(a, b)| a - b).collect();
            let r = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            if dim == 1 && r > reach {
                // Sorted points: later partners are further away.
                break;
            }
            g_value += 2.0 * variant.value(r, eps);
            let dh = variant.radial_derivative(r, eps);
            if dh != 0.0 {
                active_pairs += 2;
                for k in 0..dim {
                    let c = dh * diff[k] / r;
                    grad[i * dim + k] += c;
                    grad[j * dim + k] -= c;
                }
            }
        }
    }
    let energy_density = 0.5 * grad.iter().map(|v| v * v).sum::<f64>();
    Ok(PairEnergy {
        energy_density,
        g_value,
        active_pairs,
    })
}

/// Monte Carlo estimate of the energy functional at one `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub eps: f64,
    pub energy: f64,
    pub energy_se: f64,
    /// Mean of `g_eps^2`.
    pub l2_term: f64,
    pub l2_se: f64,
    pub n_samples: usize,
    /// Samples with a non-zero energy density.
    pub n_active: usize,
    /// No sample had an active pair; the interval carries no information.
    pub degenerate: bool,
}

impl CapacityEstimate {
    /// `energy + l2_term`, the capacity upper-bound functional.
    pub fn functional(&self) -> f64 {
        self.energy + self.l2_term
    }
}

/// Equilibrium sampler feeding the estimator.
#[derive(Clone)]
pub enum SamplerHandle {
    Dpp(Arc<SpectralDecomposition>),
    Poisson { intensity: f64, region: Region },
}

impl SamplerHandle {
    pub fn sample(&self, stream: RngStream) -> Result<Configuration> {
        match self {
            Self::Dpp(d) => sample_dpp(d, stream),
            Self::Poisson { intensity, region } => sample_poisson(*intensity, region, stream),
        }
    }

    /// `n` configurations, sample `i` from substream `i`.
    pub fn batch(&self, n: usize, stream: RngStream) -> Result<Vec<Configuration>> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.sample(stream.substream(i)))
            .collect()
    }

    pub fn window(&self) -> Region {
        match self {
            Self::Dpp(d) => Region::from(d.window),
            Self::Poisson { region, .. } => region.clone(),
        }
    }
}

/// Estimator over a fixed batch; reusing one batch across `eps` couples the
/// estimates.
pub fn estimate_on_batch(
    samples: &[Configuration],
    eps: f64,
    inner_window: &Region,
    variant: Variant,
) -> Result<CapacityEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let per: Vec<PairEnergy> = samples
        .par_iter()
        .map(|c| pair_energy(c, eps, inner_window, variant))
        .collect::<Result<_>>()?;
    let e: Vec<f64> = per.iter().map(|p| p.energy_density).collect();
    let g2: Vec<f64> = per.iter().map(|p| p.g_value * p.g_value).collect();
    let n_active = e.iter().filter(|&&v| v > 0.0).count();
    let (energy, energy_se) = batch_means(&e, N_BATCHES)?;
    let (l2_term, l2_se) = batch_means(&g2, N_BATCHES)?;
    Ok(CapacityEstimate {
        eps,
        energy,
        energy_se,
        l2_term,
        l2_se,
        n_samples: samples.len(),
        n_active,
        degenerate: n_active == 0,
    })
}

/// Draws `n_samples` equilibrium configurations and estimates the energy.
#[allow(non_snake_case)]
pub fn estimate_I_eps(
    sampler: &SamplerHandle,
    eps: f64,
    n_samples: usize,
    inner_window: &Region,
    variant: Variant,
    stream: RngStream,
) -> Result<CapacityEstimate> {
    let samples = sampler.batch(n_samples, stream)?;
    estimate_on_batch(&samples, eps, inner_window, variant)
}

/// Least-squares fit of `energy = C / |log eps|` through the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    /// `|| energy - C / |log eps| || / || energy ||`.
    pub residual: f64,
    /// Energies never increase, as `eps` shrinks, by more than their 95% intervals allow.
    pub monotone: bool,
    pub inconclusive: bool,
    /// `residual < 0.2` and monotone.
    pub certified: bool,
}

pub const DECAY_RESIDUAL: f64 = 0.2;

pub fn decay_fit(estimates: &[CapacityEstimate]) -> Result<DecayFit> {
    let mut est: Vec<&CapacityEstimate> = estimates.iter().collect();
    est.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    est.dedup_by(|a, b| a.eps == b.eps);
    if est.len() < 3 {
        return Err(Error::InvalidSpec("decay fit needs at least 3 distinct eps".into()));
    }
    let span = (est[0].eps / est[est.len() - 1].eps).log10();
    if span < 2.0 - 1e-9 {
        return Err(Error::InvalidSpec("eps values must span at least two decades".into()));
    }
    let x: Vec<f64> = est.iter().map(|e| 1.0 / e.eps.ln().abs()).collect();
    let y: Vec<f64> = est.iter().map(|e| e.energy).collect();
    let c = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let norm: f64 = y.iter().map(|b| b * b).sum();
    let residual = if norm > 0.0 { (rss / norm).sqrt() } else { 0.0 };
    let z = 1.959_963_984_540_054;
    let monotone = est
        .windows(2)
        .all(|w| w[1].energy - z * w[1].energy_se <= w[0].energy + z * w[0].energy_se);
    Ok(DecayFit {
        c,
        residual,
        monotone,
        inconclusive: !monotone,
        certified: monotone && residual < DECAY_RESIDUAL && c > 0.0 && c.is_finite(),
    })
}

/// CSV with columns `eps, energy, energy_se, l2, l2_se, n_active, C_fit, residual`.
pub fn write_capacity_csv<W: Write>(out: W, estimates: &[CapacityEstimate], fit: Option<&DecayFit>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "energy", "energy_se", "l2", "l2_se", "n_active", "C_fit", "residual"])
        .map_err(csv_err)?;
    let (c, r) = fit.map_or((String::new(), String::new()), |f| (f.c.to_string(), f.residual.to_string()));
    for e in estimates {
        w.write_record([
            e.eps.to_string(),
            e.energy.to_string(),
            e.energy_se.to_string(),
            e.l2_term.to_string(),
            e.l2_se.to_string(),
            e.n_active.to_string(),
            c.clone(),
            r.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `int int 1{eps < |x - y| < 2 eps} dx dy` over the unit cube in `R^3`,
/// i.e. the integral of `prod_k (1 - |u_k|)` over the spherical shell.
pub fn unit_cube_shell_measure(eps: f64) -> Result<f64> {
    ensure(eps > 0.0 && 2.0 * eps <= 1.0, "eps", eps, "shell must fit in the unit cube")?;
    let rr = GaussLegendre::new(24, Interval::new(eps, 2.0 * eps))?;
    let th = GaussLegendre::new(48, Interval::new(0.0, 0.5 * PI))?;
    let ph = GaussLegendre::new(48, Interval::new(0.0, 0.5 * PI))?;
    let mut total = 0.0;
    for (&r, &wr) in rr.nodes.iter().zip(&rr.weights) {
        for (&t, &wt) in th.nodes.iter().zip(&th.weights) {
            let (st, ct) = t.sin_cos();
            for (&p, &wp) in ph.nodes.iter().zip(&ph.weights) {
                let (sp, cp) = p.sin_cos();
                let u = [r * st * cp, r * st * sp, r * ct];
                let f: f64 = u.iter().map(|v| 1.0 - v).product();
                total += wr * wt * wp * r * r * st * f;
            }
        }
    }
    // Eight octants by the sign symmetry of the integrand.
    Ok(8.0 * total)
}

/// Expected linear-variant energy of a Poisson field of `intensity` on the
/// unit cube in `R^3`, to leading order in `eps`: an isolated active pair
/// contributes `4 / eps^2`, so the energy is `(2 / eps^2)` times the expected
/// number of ordered pairs in the shell.
pub fn poisson_pair_energy_oracle(intensity: f64, eps: f64) -> Result<f64> {
    Ok(2.0 / (eps * eps) * intensity * intensity * unit_cube_shell_measure(eps)?)
}
