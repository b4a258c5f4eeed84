//! Correlation functions and Janossy densities.
//!
//! Exact values come from kernel determinants; empirical ones from factorial
//! moments of bin counts. Densities are computed twice: through the
//! L-kernel, `sigma = det(Id - K) det(L(x_i, x_j))`, and through the
//! alternating series `sum_k (-1)^k / k! int rho_{n+k}` over the node measure
//! of the decomposition.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::inference::batch_means;
use crate::kernels::Kernel;
use crate::qmc::ShiftedHalton;
use crate::quadrature::GaussLegendre;
use crate::rng::RngStream;
use crate::sampler::Configuration;
use crate::spectral::SpectralDecomposition;

/// Sub-batches used for standard errors of empirical estimates.
pub const N_BATCHES: usize = 10;
/// Tolerance of the `0 <= sigma <= rho` checks.
pub const BOUND_TOL: f64 = 1e-8;

/// `rho_n(x_1..x_n) = det K(x_i, x_j)` by LU factorization.
pub fn rho_det(kernel: &Kernel, points: &[f64]) -> f64 {
    match points.len() {
        0 => 1.0,
        1 => kernel.eval(points[0], points[0]),
        n => DMatrix::from_fn(n, n, |i, j| kernel.eval(points[i], points[j])).determinant(),
    }
}

/// Bins for an empirical correlation estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationGrid {
    Single(Vec<Interval>),
    Pairs(Vec<(Interval, Interval)>),
}

impl CorrelationGrid {
    pub fn order(&self) -> usize {
        match self {
            Self::Single(_) => 1,
            Self::Pairs(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Single(b) => b.len(),
            Self::Pairs(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn intervals(&self) -> Vec<Interval> {
        match self {
            Self::Single(b) => b.clone(),
            Self::Pairs(b) => b.iter().flat_map(|(a, c)| [*a, *c]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub order: usize,
    pub grid: CorrelationGrid,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_samples: usize,
    /// Bin averages of `rho_det`, when attached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Vec<f64>>,
}

impl CorrelationEstimate {
    /// Attaches the bin-averaged determinant correlations of `kernel`.
    pub fn with_oracle(mut self, kernel: &Kernel) -> Result<Self> {
        self.oracle = Some(correlation_oracle(kernel, &self.grid)?);
        Ok(self)
    }
}

const ORACLE_NODES: usize = 24;

/// Bin averages `(1/|A|) int_A rho_1` or `(1/|A||B|) int_{A x B} rho_2`.
pub fn correlation_oracle(kernel: &Kernel, grid: &CorrelationGrid) -> Result<Vec<f64>> {
    match grid {
        CorrelationGrid::Single(bins) => bins
            .iter()
            .map(|b| {
                let q = GaussLegendre::new(ORACLE_NODES, *b)?;
                Ok(q.integrate(|x| kernel.eval(x, x)) / b.length())
            })
            .collect(),
        CorrelationGrid::Pairs(bins) => bins
            .iter()
            .map(|(a, b)| {
                let qa = GaussLegendre::new(ORACLE_NODES, *a)?;
                let qb = GaussLegendre::new(ORACLE_NODES, *b)?;
                let v = qa.integrate(|x| qb.integrate(|y| rho_det(kernel, &[x, y])));
                Ok(v / (a.length() * b.length()))
            })
            .collect(),
    }
}

fn count_half_open(c: &Configuration, b: &Interval) -> f64 {
    c.count_in(b.lo, b.hi) as f64
}

/// Factorial-moment estimate of `rho_1` or `rho_2` averaged over bins.
///
/// Pair bins `(A, B)` use `E[#{(i, j): i != j, x_i in A, x_j in B}] / (|A| |B|)`,
/// which for `A = B` is the factorial moment `E[n_A (n_A - 1)] / |A|^2`.
/// Bins are half-open `[lo, hi)`.
pub fn estimate_correlation(
    samples: &[Configuration],
    grid: &CorrelationGrid,
) -> Result<CorrelationEstimate> {
    let first = samples.first().ok_or(Error::EmptyBatch)?;
    if let Some(w) = first.window().as_interval() {
        if grid
            .intervals()
            .iter()
            .any(|b| b.lo < w.lo || b.hi > w.hi || b.lo >= b.hi)
        {
            return Err(Error::InvalidSpec("correlation bins must lie inside the window".into()));
        }
    }
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|c| match grid {
            CorrelationGrid::Single(bins) => bins
                .iter()
                .map(|b| count_half_open(c, b) / b.length())
                .collect(),
            CorrelationGrid::Pairs(bins) => bins
                .iter()
                .map(|(a, b)| {
                    let overlap = Interval::new(a.lo.max(b.lo), a.hi.min(b.hi));
                    let shared = if overlap.lo < overlap.hi {
                        count_half_open(c, &overlap)
                    } else {
                        0.0
                    };
                    (count_half_open(c, a) * count_half_open(c, b) - shared)
                        / (a.length() * b.length())
                })
                .collect(),
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut std_errors = Vec::with_capacity(grid.len());
    for cell in 0..grid.len() {
        let column: Vec<f64> = per_sample.iter().map(|v| v[cell]).collect();
        let (m, se) = batch_means(&column, N_BATCHES)?;
        values.push(m);
        std_errors.push(se);
    }
    Ok(CorrelationEstimate {
        order: grid.order(),
        grid: grid.clone(),
        values,
        std_errors,
        n_samples: samples.len(),
        oracle: None,
    })
}

/// Pooled `rho_2` at a separation: ordered pairs `x_i < x_j` with
/// `x_j - x_i` in `[distance - width/2, distance + width/2)`, divided by the
/// measure `width (|W| - distance)` of such pairs in the window `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDistanceEstimate {
    pub distance: f64,
    pub width: f64,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// The same average of `rho_det` over the pair set.
    pub oracle: f64,
}

pub fn pair_distance_correlation(
    samples: &[Configuration],
    kernel: &Kernel,
    distance: f64,
    width: f64,
) -> Result<PairDistanceEstimate> {
    let first = samples.first().ok_or(Error::EmptyBatch)?;
    let w = first
        .window()
        .as_interval()
        .ok_or_else(|| Error::InvalidSpec("pair distances need a window on the line".into()))?;
    let (lo, hi) = (distance - 0.5 * width, distance + 0.5 * width);
    if !(width > 0.0 && lo > 0.0 && hi < w.length()) {
        return Err(Error::InvalidSpec(format!(
            "separation band [{lo}, {hi}) must lie in (0, {})",
            w.length()
        )));
    }
    let area = width * (w.length() - distance);
    let per_sample: Vec<f64> = samples
        .par_iter()
        .map(|c| {
            let x = c.coords();
            let mut n = 0usize;
            for i in 0..x.len() {
                for &y in &x[i + 1..] {
                    let t = y - x[i];
                    if t >= hi {
                        break;
                    }
                    if t >= lo {
                        n += 1;
                    }
                }
            }
            n as f64 / area
        })
        .collect();
    let (value, std_error) = batch_means(&per_sample, N_BATCHES)?;
    let qt = GaussLegendre::new(ORACLE_NODES, Interval::new(lo, hi))?;
    let oracle = qt.integrate(|t| {
        let qx = GaussLegendre::new(2 * ORACLE_NODES, Interval::new(w.lo, w.hi - t)).expect("nonempty range");
        qx.integrate(|x| rho_det(kernel, &[x, x + t]))
    }) / area;
    Ok(PairDistanceEstimate {
        distance,
        width,
        value,
        std_error,
        n_samples: samples.len(),
        oracle,
    })
}

/// CSV with columns `distance, width, value, std_error, n_samples, oracle`.
pub fn write_pair_distance_csv<W: Write>(out: W, rows: &[PairDistanceEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance", "width", "value", "std_error", "n_samples", "oracle"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.distance.to_string(),
            r.width.to_string(),
            r.value.to_string(),
            r.std_error.to_string(),
            r.n_samples.to_string(),
            r.oracle.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `x_lo, x_hi[, y_lo, y_hi], value, std_error, n_samples[, oracle]`.
pub fn write_correlation_csv<W: Write>(out: W, est: &CorrelationEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let rows: Vec<Vec<f64>> = match &est.grid {
        CorrelationGrid::Single(b) => {
            b.iter().map(|i| vec![i.lo, i.hi]).collect()
        }
        CorrelationGrid::Pairs(b) => b.iter().map(|(i, j)| vec![i.lo, i.hi, j.lo, j.hi]).collect(),
    };
    let mut header: Vec<&str> = match est.grid {
        CorrelationGrid::Single(_) => vec!["x_lo", "x_hi"],
        CorrelationGrid::Pairs(_) => vec!["x_lo", "x_hi", "y_lo", "y_hi"],
    };
    header.extend(["value", "std_error", "n_samples"]);
    if est.oracle.is_some() {
        header.push("oracle");
    }
    w.write_record(&header).map_err(csv_err)?;
    for (k, ((coords, v), se)) in rows.iter().zip(&est.values).zip(&est.std_errors).enumerate() {
        let mut rec: Vec<String> = coords.iter().map(f64::to_string).collect();
        rec.push(v.to_string());
        rec.push(se.to_string());
        rec.push(est.n_samples.to_string());
        if let Some(o) = &est.oracle {
            rec.push(o[k].to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `sigma^n = det(Id - K) det(L(x_i, x_j))`; the void probability for `n = 0`.
pub fn sigma_fredholm(decomp: &SpectralDecomposition, points: &[f64]) -> Result<f64> {
    let det = decomp.fredholm_det()?;
    if points.is_empty() {
        return Ok(det);
    }
    let l = decomp.l_kernel()?;
    Ok(det * l.matrix(points).determinant())
}

/// Controls for the series evaluation of densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Largest number of node subsets summed exactly for one term.
    pub exact_limit: u64,
    /// Total quasi-random points per term beyond the exact range.
    pub qmc_points: u64,
    /// Independent random shifts the quasi-random points are split into.
    pub qmc_shifts: u64,
    pub seed: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            exact_limit: 3_000_000,
            qmc_points: 1_000_000,
            qmc_shifts: 32,
            seed: 0x5eed,
        }
    }
}

/// Result of the truncated alternating series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// `min(majorant_tail, fischer_tail)` plus the quasi-random standard errors.
    pub truncation_bound: f64,
    /// Tail of `c^k k^(-k+1/2) (n+k)^((n+k)/2) M^(n+k)` with `c = e |I|`.
    pub majorant_tail: f64,
    /// Tail of `rho_n(x) e_k(lambda)`, from Fischer's inequality.
    pub fischer_tail: f64,
    /// `(1/k!) int rho_{n+k}` for `k = 0..=k_max`.
    pub terms: Vec<f64>,
    /// Standard error of each term (zero where summed exactly).
    pub term_errors: Vec<f64>,
}

/// Determinant of a small dense matrix stored row-major in `a` (destroyed).
fn small_det(a: &mut [f64], m: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..m {
        let mut p = c;
        for r in c + 1..m {
            if a[r * m + c].abs() > a[p * m + c].abs() {
                p = r;
            }
        }
        let piv = a[p * m + c];
        if piv == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..m {
                a.swap(c * m + j, p * m + j);
            }
            det = -det;
        }
        det *= piv;
        for r in c + 1..m {
            let f = a[r * m + c] / piv;
            if f != 0.0 {
                for j in c + 1..m {
                    a[r * m + j] -= f * a[c * m + j];
                }
            }
        }
    }
    det
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Kernel matrix on `nodes ++ points`, row-major.
struct Tableau {
    size: usize,
    n_fixed: usize,
    n_nodes: usize,
    k: Vec<f64>,
}

impl Tableau {
    fn new(kernel: &Kernel, nodes: &[f64], points: &[f64]) -> Self {
        let all: Vec<f64> = points.iter().chain(nodes).copied().collect();
        let size = all.len();
        let mut k = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..=i {
                let v = kernel.eval(all[i], all[j]);
                k[i * size + j] = v;
                k[j * size + i] = v;
            }
        }
        Self {
            size,
            n_fixed: points.len(),
            n_nodes: nodes.len(),
            k,
        }
    }

    /// `det K[points ++ nodes[idx]]`.
    fn det_with(&self, idx: &[usize], buf: &mut Vec<f64>) -> f64 {
        let rows: Vec<usize> = (0..self.n_fixed)
            .chain(idx.iter().map(|&q| self.n_fixed + q))
            .collect();
        let m = rows.len();
        buf.clear();
        for &r in &rows {
            buf.extend(rows.iter().map(|&c| self.k[r * self.size + c]));
        }
        small_det(buf, m)
    }
}

/// Sum over strictly increasing `k`-subsets of nodes of `prod w * det`.
fn exact_term(tab: &Tableau, weights: &[f64], k: usize) -> f64 {
    fn recurse(
        tab: &Tableau,
        weights: &[f64],
        idx: &mut Vec<usize>,
        start: usize,
        k: usize,
        wprod: f64,
        buf: &mut Vec<f64>,
    ) -> f64 {
        if idx.len() == k {
            return wprod * tab.det_with(idx, buf);
        }
        let mut s = 0.0;
        for q in start..=(tab.n_nodes - (k - idx.len())) {
            idx.push(q);
            s += recurse(tab, weights, idx, q + 1, k, wprod * weights[q], buf);
            idx.pop();
        }
        s
    }
    if k == 0 {
        return tab.det_with(&[], &mut Vec::new());
    }
    let parts: Vec<f64> = (0..=(tab.n_nodes - k))
        .into_par_iter()
        .map(|q0| {
            let mut idx = vec![q0];
            let mut buf = Vec::new();
            recurse(tab, weights, &mut idx, q0 + 1, k, weights[q0], &mut buf)
        })
        .collect();
    parts.iter().sum()
}

/// Randomized quasi-Monte Carlo estimate of `(1/k!) sum over ordered
/// k-tuples of prod w * det` with its standard error.
fn qmc_term(
    tab: &Tableau,
    weights: &[f64],
    length: f64,
    k: usize,
    opts: &SeriesOptions,
) -> (f64, f64) {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let per_shift = (opts.qmc_points / opts.qmc_shifts).max(1);
    let base = RngStream::new(opts.seed, k as u64);
    let means: Vec<f64> = (0..opts.qmc_shifts)
        .into_par_iter()
        .map(|s| {
            let h = ShiftedHalton::new(k, base.substream(s));
            let mut u = vec![0.0; k];
            let mut idx = vec![0usize; k];
            let mut buf = Vec::new();
            let mut sum = 0.0;
            for i in 0..per_shift {
                h.point(i, &mut u);
                for (d, &x) in u.iter().enumerate() {
                    idx[d] = cdf.partition_point(|&c| c <= x * acc).min(weights.len() - 1);
                }
                sum += tab.det_with(&idx, &mut buf);
            }
            sum / per_shift as f64
        })
        .collect();
    let s = means.len() as f64;
    let mean = means.iter().sum::<f64>() / s;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (s - 1.0).max(1.0);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let scale = length.powi(k as i32) / fact;
    (scale * mean, scale * (var / s).sqrt())
}

/// `ln` of `c^k k^(-k+1/2) (n+k)^((n+k)/2) M^(n+k)` with `c = e |I|`.
fn ln_majorant(n: usize, k: usize, length: f64, sup: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let m = nf + kf;
    let kpart = if k == 0 { 0.0 } else { (-kf + 0.5) * kf.ln() };
    let mpart = if m == 0.0 { 0.0 } else { 0.5 * m * m.ln() + m * sup.ln() };
    kf * (std::f64::consts::E * length).ln() + kpart + mpart
}

/// Sum of the majorant terms for `k > k_max`.
pub fn majorant_tail(n: usize, k_max: usize, length: f64, sup: f64) -> f64 {
    if sup == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in k_max + 1..k_max + 400 {
        let t = ln_majorant(n, k, length, sup).exp();
        total += t;
        if k > k_max + 5 && t < 1e-30 * total.max(1e-300) {
            break;
        }
    }
    total
}

/// Elementary symmetric polynomials `e_0..e_len` of `lambda`.
pub fn elementary_symmetric(lambda: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; lambda.len() + 1];
    e[0] = 1.0;
    for (m, &l) in lambda.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += l * e[k - 1];
        }
    }
    e
}

/// Alternating series for `sigma^n` over the node measure of `decomp`,
/// truncated after `k_max` correction terms.
///
/// Terms with at most `opts.exact_limit` node subsets are summed exactly;
/// larger ones use randomized Halton points on the node measure.
pub fn sigma_series(
    decomp: &SpectralDecomposition,
    points: &[f64],
    k_max: usize,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    let kernel = decomp.kernel();
    let n = points.len();
    let length = decomp.window.length();
    let tab = Tableau::new(kernel, &decomp.nodes, points);
    let mut terms = Vec::with_capacity(k_max + 1);
    let mut term_errors = Vec::with_capacity(k_max + 1);
    let rho_n = rho_det(kernel, points);
    for k in 0..=k_max.min(decomp.n_nodes()) {
        if n > 0 && rho_n.abs() == 0.0 {
            terms.push(0.0);
            term_errors.push(0.0);
            continue;
        }
        if binomial(decomp.n_nodes() as u64, k as u64) <= opts.exact_limit as f64 {
            terms.push(exact_term(&tab, &decomp.weights, k));
            term_errors.push(0.0);
        } else {
            let (t, se) = qmc_term(&tab, &decomp.weights, length, k, opts);
            terms.push(t);
            term_errors.push(se);
        }
    }
    let value = terms
        .iter()
        .enumerate()
        .map(|(k, t)| if k % 2 == 0 { *t } else { -t })
        .sum();
    let sup = kernel.sup_on(decomp.window, decomp.n_nodes())?;
    let majorant = majorant_tail(n, k_max, length, sup);
    let e = elementary_symmetric(&decomp.eigenvalues);
    let fischer = rho_n.max(0.0) * e.iter().skip(k_max + 1).sum::<f64>();
    let truncation_bound = majorant.min(fischer) + term_errors.iter().sum::<f64>();
    Ok(SeriesValue {
        value,
        truncation_bound,
        majorant_tail: majorant,
        fischer_tail: fischer,
        terms,
        term_errors,
    })
}

/// Both evaluations of one density value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub order: usize,
    pub points: Vec<f64>,
    pub value_series: f64,
    pub value_fredholm: f64,
    pub truncation_k: usize,
    pub truncation_bound: f64,
}

impl DensityValue {
    pub fn tolerance(&self) -> f64 {
        (3.0 * self.truncation_bound).max(1e-6)
    }

    pub fn agrees(&self) -> bool {
        (self.value_series - self.value_fredholm).abs() <= self.tolerance()
    }
}

pub fn density_crosscheck(
    decomp: &SpectralDecomposition,
    points: &[f64],
    k_max: usize,
    opts: &SeriesOptions,
) -> Result<DensityValue> {
    let s = sigma_series(decomp, points, k_max, opts)?;
    Ok(DensityValue {
        order: points.len(),
        points: points.to_vec(),
        value_series: s.value,
        value_fredholm: sigma_fredholm(decomp, points)?,
        truncation_k: k_max,
        truncation_bound: s.truncation_bound,
    })
}

/// CSV with columns `order, points, value_series, value_fredholm,
/// truncation_k, truncation_bound`; points are `;`-separated.
pub fn write_density_csv<W: Write>(out: W, rows: &[DensityValue]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "order",
        "points",
        "value_series",
        "value_fredholm",
        "truncation_k",
        "truncation_bound",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let pts: Vec<String> = r.points.iter().map(f64::to_string).collect();
        w.write_record([
            r.order.to_string(),
            pts.join(";"),
            r.value_series.to_string(),
            r.value_fredholm.to_string(),
            r.truncation_k.to_string(),
            r.truncation_bound.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// A point tuple at which `0 <= sigma <= rho` fails by more than [`BOUND_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub points: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
}

/// Least-squares slope of `log sigma^2(x, x + t)` against `log t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapExponentFit {
    pub x: f64,
    pub gaps: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaBoundReport {
    pub n_checked: usize,
    pub violations: Vec<BoundViolation>,
    pub gap_fit: Option<GapExponentFit>,
    /// Accepted slope range for the kernel's Hölder exponent, if any.
    pub slope_range: Option<(f64, f64)>,
    pub passed: bool,
}

/// Gap range of the exponent fit.
pub const GAP_FIT_RANGE: (f64, f64) = (1e-3, 1e-1);
pub const GAP_FIT_POINTS: usize = 25;

/// Ordinary least squares `y = a + b x`; returns `(b, a)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

pub fn gap_exponent(decomp: &SpectralDecomposition, x: f64) -> Result<GapExponentFit> {
    let (t0, t1) = GAP_FIT_RANGE;
    let gaps: Vec<f64> = (0..GAP_FIT_POINTS)
        .map(|i| t0 * (t1 / t0).powf(i as f64 / (GAP_FIT_POINTS - 1) as f64))
        .collect();
    let sigmas = gaps
        .iter()
        .map(|&t| sigma_fredholm(decomp, &[x, x + t]))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(&bad) = sigmas.iter().find(|&&s| s <= 0.0) {
        return Err(Error::NearSingular { value: bad });
    }
    let lx: Vec<f64> = gaps.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = sigmas.iter().map(|s| s.ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    Ok(GapExponentFit {
        x,
        gaps,
        sigmas,
        slope,
        intercept,
    })
}

/// Accepted slopes for a Hölder exponent `alpha`. In the Lipschitz case only
/// a linear upper bound on the density is available, so steeper decay is
/// tolerated.
pub fn exponent_window(alpha: f64) -> (f64, f64) {
    if alpha >= 1.0 {
        (alpha - 0.15, 1.3)
    } else {
        (alpha - 0.15, alpha + 0.15)
    }
}

/// Checks `0 <= sigma <= rho` at every tuple and, for the product family,
/// fits the small-gap exponent of `sigma^2` at `x = 0`.
pub fn verify_sigma_bounds(
    decomp: &SpectralDecomposition,
    tuples: &[Vec<f64>],
) -> Result<SigmaBoundReport> {
    let kernel = decomp.kernel();
    let mut violations = Vec::new();
    for pts in tuples {
        let sigma = if pts.len() >= 2 && pts.windows(2).any(|w| w[0] == w[1]) {
            0.0
        } else {
            sigma_fredholm(decomp, pts)?
        };
        let rho = rho_det(kernel, pts);
        if sigma < -BOUND_TOL || sigma > rho + BOUND_TOL {
            violations.push(BoundViolation {
                points: pts.clone(),
                sigma,
                rho,
            });
        }
    }
    let (gap_fit, slope_range) = match kernel.product_alpha() {
        Some(alpha) => {
            let x = if decomp.window.contains(0.0) {
                0.0
            } else {
                decomp.window.midpoint()
            };
            (Some(gap_exponent(decomp, x)?), Some(exponent_window(alpha)))
        }
        None => (None, None),
    };
    let slope_ok = match (&gap_fit, slope_range) {
        (Some(f), Some((lo, hi))) => lo <= f.slope && f.slope <= hi,
        _ => true,
    };
    Ok(SigmaBoundReport {
        n_checked: tuples.len(),
        passed: violations.is_empty() && slope_ok,
        violations,
        gap_fit,
        slope_range,
    })
}
