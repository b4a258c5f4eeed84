//! Finite-N Dyson dynamics and distorted Brownian motion, integrated with an
//! adaptive Euler–Maruyama scheme, and collision statistics built on them.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::Interval;
use crate::inference::{clopper_pearson, ks_two_sample, TestOutcome};
use crate::rng::RngStream;
use crate::sampler::{confinement, sample_dpp, sample_log_gas_with, Configuration};
use crate::spectral::SpectralDecomposition;
use crate::statistics::csv_err;

/// Fraction of failed paths above which a probe is inconclusive.
pub const INCONCLUSIVE_FAILURES: f64 = 0.05;
const MAX_SECTOR_DRAWS: usize = 100_000;

fn check_sorted(points: &[f64]) -> Result<()> {
    match points.windows(2).position(|w| w[0] >= w[1]) {
        Some(i) => Err(Error::SingularConfiguration { i, j: i + 1 }),
        None => Ok(()),
    }
}

/// `b_i = sum_{j != i} 1 / (x_i - x_j) - lambda x_i`.
pub fn dyson_drift(points: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_sorted(points)?;
    let n = points.len();
    let mut b: Vec<f64> = points.iter().map(|x| -lambda * x).collect();
    for i in 0..n {
        for j in i + 1..n {
            let r = 1.0 / (points[i] - points[j]);
            b[i] += r;
            b[j] -= r;
        }
    }
    Ok(b)
}

/// `H = sum_{i != j} -2 log|x_i - x_j| + lambda sum x_i^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum LogGasEnergy {
    Finite(f64),
    /// Coincident points.
    Overflow,
}

impl LogGasEnergy {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Overflow => f64::INFINITY,
        }
    }
}

pub fn loggas_energy(points: &[f64], lambda: f64) -> LogGasEnergy {
    let mut e = lambda * points.iter().map(|x| x * x).sum::<f64>();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).abs();
            if d == 0.0 {
                return LogGasEnergy::Overflow;
            }
            // Both ordered pairs.
            e -= 4.0 * d.ln();
        }
    }
    LogGasEnergy::Finite(e)
}

/// Random-walk Metropolis chain on `exp(-E(x; 2 lambda) / 2)`, the density
/// `prod |x_i - x_j|^2 exp(-lambda sum x^2)`. Returns `n_draws` sorted states
/// taken every `thin` steps after a burn-in of `500 thin` steps.
pub fn metropolis_log_gas(
    n_points: usize,
    lambda: f64,
    n_draws: usize,
    thin: usize,
    stream: RngStream,
) -> Result<Vec<Vec<f64>>> {
    ensure(n_points >= 1, "N", n_points as f64, "need at least one point")?;
    ensure(lambda > 0.0, "lambda", lambda, "must be positive")?;
    ensure(thin >= 1, "thin", thin as f64, "must be at least 1")?;
    let log_p = |x: &[f64]| -0.5 * loggas_energy(x, 2.0 * lambda).value();
    let mut rng = stream.rng();
    let mut x: Vec<f64> = (0..n_points).map(|i| i as f64 - 0.5 * (n_points - 1) as f64).collect();
    let mut lp = log_p(&x);
    let scale = (0.5 / lambda).sqrt() / (n_points as f64).sqrt();
    let burn = 500 * thin;
    let mut prop = x.clone();
    let mut out = Vec::with_capacity(n_draws);
    for step in 0..burn + n_draws * thin {
        for (p, v) in prop.iter_mut().zip(&x) {
            *p = v + scale * rng.sample::<f64, _>(StandardNormal);
        }
        let nlp = log_p(&prop);
        if rng.random::<f64>().ln() < nlp - lp {
            x.copy_from_slice(&prop);
            lp = nlp;
        }
        if step >= burn && (step - burn) % thin == thin - 1 {
            let mut s = x.clone();
            s.sort_by(f64::total_cmp);
            out.push(s);
        }
    }
    Ok(out)
}

/// Two-sample KS comparison of the direct log-gas sampler against
/// [`metropolis_log_gas`] for two points: lower point, upper point and gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGasCertificate {
    pub lambda: f64,
    pub n_draws: usize,
    pub tests: Vec<TestOutcome>,
    pub level: f64,
    pub passed: bool,
}

pub fn certify_log_gas(density: f64, n_draws: usize, level: f64, stream: RngStream) -> Result<LogGasCertificate> {
    let lambda = confinement(2, density);
    let direct: Vec<Vec<f64>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|i| sample_log_gas_with(2, lambda, stream.substream(0).substream(i)).map(|c| c.coords().to_vec()))
        .collect::<Result<_>>()?;
    let mcmc = metropolis_log_gas(2, lambda, n_draws, 20, stream.substream(1))?;
    let stats: [fn(&Vec<f64>) -> f64; 3] = [|p| p[0], |p| p[1], |p| p[1] - p[0]];
    let tests = stats
        .iter()
        .map(|f| {
            let a: Vec<f64> = direct.iter().map(f).collect();
            let b: Vec<f64> = mcmc.iter().map(f).collect();
            ks_two_sample(&a, &b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LogGasCertificate {
        lambda,
        n_draws,
        passed: tests.iter().all(|t| t.passes(level)),
        tests,
        level,
    })
}

/// Log-density gradient machinery for `sigma^n` on a fixed window.
///
/// Only `det L(x_i, x_j)` depends on the points, with
/// `L(x, y) = K(x, y) + k_x^T R k_y`, `k_x = (K(x, x_q))_q` and
/// `R = W V diag(1 / (1 - lambda)) V^T W` precomputed.
pub struct DensityField {
    decomp: Arc<SpectralDecomposition>,
    r: DMatrix<f64>,
}

struct Column {
    x: f64,
    k: DVector<f64>,
    rk: DVector<f64>,
}

impl DensityField {
    pub fn new(decomp: Arc<SpectralDecomposition>) -> Result<Self> {
        decomp.l_kernel()?;
        let n = decomp.n_nodes();
        let active: Vec<usize> = decomp.active().collect();
        let mut wv = DMatrix::zeros(n, active.len());
        for (c, &i) in active.iter().enumerate() {
            let g = 1.0 / (1.0 - decomp.eigenvalues[i]).sqrt();
            for q in 0..n {
                wv[(q, c)] = decomp.weights[q] * decomp.eigenvectors[(q, i)] * g;
            }
        }
        let r = &wv * wv.transpose();
        Ok(Self { decomp, r })
    }

    pub fn window(&self) -> Interval {
        self.decomp.window
    }

    fn column(&self, x: f64) -> Column {
        let kernel = self.decomp.kernel();
        let k = DVector::from_iterator(
            self.decomp.n_nodes(),
            self.decomp.nodes.iter().map(|&xq| kernel.eval(x, xq)),
        );
        let rk = &self.r * &k;
        Column { x, k, rk }
    }

    fn entry(&self, a: &Column, b: &Column) -> f64 {
        self.decomp.kernel().eval(a.x, b.x) + a.k.dot(&b.rk)
    }

    fn det(&self, cols: &[&Column]) -> f64 {
        let n = cols.len();
        match n {
            1 => self.entry(cols[0], cols[0]),
            2 => {
                let off = self.entry(cols[0], cols[1]);
                self.entry(cols[0], cols[0]) * self.entry(cols[1], cols[1]) - off * off
            }
            _ => DMatrix::from_fn(n, n, |i, j| self.entry(cols[i], cols[j])).determinant(),
        }
    }

    /// `det L(x_i, x_j)`; `sigma^n` up to the constant `det(Id - K)`.
    pub fn l_det(&self, points: &[f64]) -> f64 {
        let cols: Vec<Column> = points.iter().map(|&x| self.column(x)).collect();
        self.det(&cols.iter().collect::<Vec<_>>())
    }

    /// Central differences of `(1/2) log sigma^n` with step `h`.
    pub fn drift(&self, points: &[f64], h: f64) -> Result<Vec<f64>> {
        check_sorted(points)?;
        let cols: Vec<Column> = points.iter().map(|&x| self.column(x)).collect();
        let mut out = Vec::with_capacity(points.len());
        for (i, &xi) in points.iter().enumerate() {
            let mut side = [0.0; 2];
            for (s, sign) in [1.0, -1.0].iter().enumerate() {
                let moved = self.column(xi + sign * h);
                let refs: Vec<&Column> = cols
                    .iter()
                    .enumerate()
                    .map(|(j, c)| if j == i { &moved } else { c })
                    .collect();
                let d = self.det(&refs);
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::NearSingular { value: d });
                }
                side[s] = d.ln();
            }
            out.push(0.5 * (side[0] - side[1]) / (2.0 * h));
        }
        Ok(out)
    }
}

/// `b_i = (1/2) d/dx_i log sigma^n`, by central differences with step `h`.
pub fn distorted_drift(decomp: &SpectralDecomposition, points: &[f64], h: f64) -> Result<Vec<f64>> {
    ensure(h > 0.0 && h.is_finite(), "h", h, "must be positive")?;
    DensityField::new(Arc::new(decomp.clone()))?.drift(points, h)
}

/// Finite-difference step `max(1e-4, 1e-2 g)`, kept at most `g / 2` so the
/// stencil never reaches the diagonal.
pub fn stencil_step(g_min: f64) -> f64 {
    (1e-4f64).max(1e-2 * g_min).min(0.5 * g_min)
}

/// Drift of the integrated diffusion.
#[derive(Clone)]
pub enum DriftSpec {
    /// No drift: independent Brownian motions.
    Free,
    /// Dyson interaction with quadratic confinement of strength `lambda`.
    Dyson { lambda: f64 },
    /// `(1/2) grad log sigma^n` on the window, reflected at its ends.
    Distorted(Arc<DensityField>),
}

impl DriftSpec {
    pub fn distorted(decomp: Arc<SpectralDecomposition>) -> Result<Self> {
        Ok(Self::Distorted(Arc::new(DensityField::new(decomp)?)))
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Free => Ok(vec![0.0; x.len()]),
            Self::Dyson { lambda } => dyson_drift(x, *lambda),
            Self::Distorted(f) => {
                let g = min_gap(x).unwrap_or(1.0);
                f.drift(x, stencil_step(g))
            }
        }
    }

    fn reflect(&self, x: &mut [f64]) {
        if let Self::Distorted(f) = self {
            let w = f.window();
            for v in x.iter_mut() {
                if *v > w.hi {
                    *v = 2.0 * w.hi - *v;
                } else if *v < w.lo {
                    *v = 2.0 * w.lo - *v;
                }
            }
        }
    }
}

fn min_gap(x: &[f64]) -> Option<f64> {
    x.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub dt_max: f64,
    /// `dt = min(dt_max, c_dt g_min^2)`.
    pub c_dt: f64,
    pub max_halvings: u32,
    /// Record every `k`-th accepted step; `None` keeps only the endpoints.
    pub record_every: Option<usize>,
    /// Stop the path at the first `delta`-hit.
    pub stop_at_hit: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt_max: 1e-3,
            c_dt: 1e-2,
            max_halvings: 20,
            record_every: None,
            stop_at_hit: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Completed,
    Hit,
    Failed { time: f64, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
    pub min_gap_series: Vec<f64>,
    pub hit_flag: bool,
    pub hit_time: Option<f64>,
    /// Proposals rejected for breaking the order.
    pub rejections: u64,
    pub steps: u64,
    pub status: PathStatus,
}

impl Trajectory {
    /// CSV with columns `time, x_0..x_{N-1}, min_gap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.states.first().map_or(0, |c| c.len());
        let mut header = vec!["time".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.push("min_gap".into());
        w.write_record(&header).map_err(csv_err)?;
        for ((t, s), g) in self.times.iter().zip(&self.states).zip(&self.min_gap_series) {
            let mut rec = vec![t.to_string()];
            rec.extend(s.coords().iter().map(f64::to_string));
            rec.push(g.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Recorder {
    times: Vec<f64>,
    states: Vec<Configuration>,
    gaps: Vec<f64>,
}

impl Recorder {
    fn push(&mut self, t: f64, x: &[f64], window: &crate::geometry::Region) {
        self.times.push(t);
        self.states.push(Configuration::on_line(x.to_vec(), window.clone()));
        self.gaps.push(min_gap(x).unwrap_or(f64::INFINITY));
    }
}

/// Adaptive Euler–Maruyama for `dX = b(X) dt + dB` on the line, from a
/// strictly sorted initial configuration up to time `t_end`.
///
/// Proposals that break the order are redrawn with half the step, at most
/// `max_halvings` times; exhausting them counts as a hit when the minimum
/// gap is already at most `delta`, and as a failure otherwise.
pub fn integrate_sde(
    initial: &Configuration,
    drift: &DriftSpec,
    t_end: f64,
    delta: f64,
    stream: RngStream,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    ensure(t_end > 0.0, "T", t_end, "must be positive")?;
    ensure(delta > 0.0, "delta", delta, "must be positive")?;
    if initial.dim() != 1 {
        return Err(Error::InvalidSpec("dynamics run on the line".into()));
    }
    check_sorted(initial.coords())?;
    let window = initial.window().clone();
    let mut rng = stream.rng();
    let mut x = initial.coords().to_vec();
    let n = x.len();
    let mut rec = Recorder {
        times: Vec::new(),
        states: Vec::new(),
        gaps: Vec::new(),
    };
    rec.push(0.0, &x, &window);
    let mut t = 0.0;
    let mut hit_time = None;
    let mut rejections = 0;
    let mut steps = 0u64;
    let mut status = PathStatus::Completed;
    let mut proposal = vec![0.0; n];
    if min_gap(&x).is_some_and(|g| g <= delta) {
        hit_time = Some(0.0);
    }
    while t < t_end && !(hit_time.is_some() && opts.stop_at_hit) {
        let g = min_gap(&x);
        let b = match drift.eval(&x) {
            Ok(b) => b,
            Err(e) => {
                status = PathStatus::Failed {
                    time: t,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let mut dt = g
            .map_or(opts.dt_max, |g| opts.dt_max.min(opts.c_dt * g * g))
            .min(t_end - t);
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let sq = dt.sqrt();
            for i in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                proposal[i] = x[i] + b[i] * dt + sq * z;
            }
            drift.reflect(&mut proposal);
            if proposal.windows(2).all(|w| w[0] < w[1]) {
                accepted = true;
                break;
            }
            rejections += 1;
            dt *= 0.5;
        }
        if !accepted {
            if g.is_some_and(|g| g <= delta) {
                hit_time.get_or_insert(t);
            } else {
                status = PathStatus::Failed {
                    time: t,
                    reason: format!("step size underflow at min gap {:.3e}", g.unwrap_or(0.0)),
                };
            }
            break;
        }
        x.copy_from_slice(&proposal);
        t += dt;
        steps += 1;
        let g_new = min_gap(&x);
        if hit_time.is_none() && g_new.is_some_and(|g| g <= delta) {
            hit_time = Some(t);
        }
        if opts.record_every.is_some_and(|k| steps.is_multiple_of(k as u64)) {
            rec.push(t, &x, &window);
        }
    }
    if rec.times.last() != Some(&t) {
        rec.push(t, &x, &window);
    }
    if hit_time.is_some() && !matches!(status, PathStatus::Failed { .. }) {
        status = PathStatus::Hit;
    }
    Ok(Trajectory {
        times: rec.times,
        states: rec.states,
        min_gap_series: rec.gaps,
        hit_flag: hit_time.is_some(),
        hit_time,
        rejections,
        steps,
        status,
    })
}

/// Finite-horizon hitting frequencies with a 95% Clopper–Pearson interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingStats {
    pub n_paths: u64,
    pub n_hit: u64,
    pub n_failures: u64,
    pub delta: f64,
    pub t_end: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl HittingStats {
    pub fn new(n_paths: u64, n_hit: u64, n_failures: u64, delta: f64, t_end: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(n_hit, n_paths, 0.95);
        Self {
            n_paths,
            n_hit,
            n_failures,
            delta,
            t_end,
            ci_low,
            ci_high,
        }
    }

    pub fn hit_fraction(&self) -> f64 {
        if self.n_paths == 0 {
            0.0
        } else {
            self.n_hit as f64 / self.n_paths as f64
        }
    }

    /// Pools two runs with the same `delta` and horizon.
    pub fn merge(&self, other: &Self) -> Self {
        Self::new(
            self.n_paths + other.n_paths,
            self.n_hit + other.n_hit,
            self.n_failures + other.n_failures,
            self.delta,
            self.t_end,
        )
    }

    pub fn inconclusive(&self) -> bool {
        self.n_failures as f64 > INCONCLUSIVE_FAILURES * self.n_paths as f64
    }
}

/// Equilibrium dynamics probed for collisions.
#[derive(Clone)]
pub enum ProbeModel {
    /// `N` log-gas particles with confinement `lambda`.
    Dyson { n: usize, lambda: f64 },
    /// Distorted Brownian motion in the `n`-point sector of a windowed field.
    Distorted {
        decomp: Arc<SpectralDecomposition>,
        n: usize,
    },
}

/// JSON summary of a collision probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub hit_fraction: f64,
    pub ci: (f64, f64),
    pub n_failures: u64,
    pub inconclusive: bool,
    pub stats: HittingStats,
    pub params: serde_json::Value,
}

impl ProbeSummary {
    pub fn new(stats: HittingStats, params: serde_json::Value) -> Self {
        Self {
            hit_fraction: stats.hit_fraction(),
            ci: (stats.ci_low, stats.ci_high),
            n_failures: stats.n_failures,
            inconclusive: stats.inconclusive(),
            stats,
            params,
        }
    }
}

/// Draw from the `n`-point sector: sample the field until it has `n` points.
pub fn sample_sector(decomp: &SpectralDecomposition, n: usize, stream: RngStream) -> Result<Configuration> {
    for i in 0..MAX_SECTOR_DRAWS {
        let c = sample_dpp(decomp, stream.substream(i as u64))?;
        if c.len() == n {
            return Ok(c);
        }
    }
    Err(Error::SamplingFailed(format!(
        "no {n}-point configuration in {MAX_SECTOR_DRAWS} draws"
    )))
}

fn initial_state(model: &ProbeModel, stream: RngStream) -> Result<Configuration> {
    match model {
        ProbeModel::Dyson { n, lambda } => sample_log_gas_with(*n, *lambda, stream),
        ProbeModel::Distorted { decomp, n } => sample_sector(decomp, *n, stream),
    }
}

fn drift_of(model: &ProbeModel) -> Result<DriftSpec> {
    match model {
        ProbeModel::Dyson { lambda, .. } => Ok(DriftSpec::Dyson { lambda: *lambda }),
        ProbeModel::Distorted { decomp, .. } => DriftSpec::distorted(decomp.clone()),
    }
}

/// Runs `n_paths` equilibrium-started paths and tallies `delta`-hits.
/// Path `p` uses substream `p` of `stream`.
pub fn collision_probe(
    model: &ProbeModel,
    n_paths: u64,
    t_end: f64,
    delta: f64,
    stream: RngStream,
    opts: &IntegratorOptions,
) -> Result<HittingStats> {
    ensure(n_paths > 0, "n_paths", n_paths as f64, "must be positive")?;
    let drift = drift_of(model)?;
    let outcomes: Vec<PathStatus> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let s = stream.substream(p);
            let init = initial_state(model, s.substream(0))?;
            Ok(integrate_sde(&init, &drift, t_end, delta, s.substream(1), opts)?.status)
        })
        .collect::<Result<Vec<_>>>()?;
    let n_hit = outcomes.iter().filter(|s| **s == PathStatus::Hit).count() as u64;
    let n_fail = outcomes
        .iter()
        .filter(|s| matches!(s, PathStatus::Failed { .. }))
        .count() as u64;
    Ok(HittingStats::new(n_paths, n_hit, n_fail, delta, t_end))
}

/// Squeezes the pair `(i, i + 1)` of a sorted configuration to gap `g0`
/// around its midpoint.
pub fn squeeze_pair(config: &Configuration, i: usize, g0: f64) -> Result<Configuration> {
    let mut x = config.coords().to_vec();
    if i + 1 >= x.len() {
        return Err(Error::InvalidSpec("pair index out of range".into()));
    }
    let m = 0.5 * (x[i] + x[i + 1]);
    x[i] = m - 0.5 * g0;
    x[i + 1] = m + 0.5 * g0;
    check_sorted(&x)?;
    Ok(Configuration::on_line(x, config.window().clone()))
}

/// Effective dimension of a pair gap from `E[g_t^2] = g_0^2 + 2 d t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapDimensionFit {
    pub g0: f64,
    pub times: Vec<f64>,
    pub mean_sq: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub dimension: f64,
    pub dimension_se: f64,
    pub n_paths: u64,
    pub n_hit: u64,
}

/// Simulates `n_paths` copies of `initial` (whose pair `(i, i + 1)` is the
/// probed one) and fits the effective dimension of that gap at `times`.
/// Paths that reach `delta` are kept at their last gap.
pub fn gap_dimension_fit(
    initial: &Configuration,
    pair: usize,
    drift: &DriftSpec,
    times: &[f64],
    n_paths: u64,
    stream: RngStream,
) -> Result<GapDimensionFit> {
    ensure(!times.is_empty(), "times", 0.0, "need at least one time")?;
    let x0 = initial.coords();
    ensure(pair + 1 < x0.len(), "pair", pair as f64, "out of range")?;
    let g0 = x0[pair + 1] - x0[pair];
    let opts = IntegratorOptions {
        stop_at_hit: false,
        ..IntegratorOptions::default()
    };
    let delta = 1e-3 * g0;
    let per_path: Vec<(Vec<f64>, bool)> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut start = initial.clone();
            let mut t_prev = 0.0;
            let mut sq = Vec::with_capacity(times.len());
            let mut hit = false;
            for (k, &t) in times.iter().enumerate() {
                let tr = integrate_sde(&start, drift, t - t_prev, delta, stream.substream(p).substream(k as u64), &opts)?;
                hit |= tr.hit_flag || matches!(tr.status, PathStatus::Failed { .. });
                start = tr.states.last().unwrap().clone();
                let x = start.coords();
                sq.push((x[pair + 1] - x[pair]).powi(2));
                t_prev = t;
            }
            Ok((sq, hit))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = n_paths as f64;
    let mut mean_sq = Vec::new();
    let mut std_errors = Vec::new();
    for k in 0..times.len() {
        let v: Vec<f64> = per_path.iter().map(|(s, _)| s[k]).collect();
        let (m, sd) = crate::inference::mean_sd(&v);
        mean_sq.push(m);
        std_errors.push(sd / n.sqrt());
    }
    // Weighted least squares through the origin of (E g^2 - g0^2) / 2 on t.
    let (mut num, mut den) = (0.0, 0.0);
    for ((t, m), se) in times.iter().zip(&mean_sq).zip(&std_errors) {
        let w = 1.0 / (0.25 * se * se).max(1e-300);
        num += w * t * 0.5 * (m - g0 * g0);
        den += w * t * t;
    }
    Ok(GapDimensionFit {
        g0,
        times: times.to_vec(),
        mean_sq,
        std_errors,
        dimension: num / den,
        dimension_se: den.sqrt().recip(),
        n_paths,
        n_hit: per_path.iter().filter(|(_, h)| *h).count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;
    use crate::inference::ks_one_sample;
    use crate::kernels::KernelSpec;
    use crate::spectral::nystrom_decompose;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn line(x: Vec<f64>) -> Configuration {
        Configuration::on_line(x, Region::whole_line())
    }

    #[test]
    fn dyson_drift_examples() {
        assert_eq!(dyson_drift(&[2.0], 0.5).unwrap(), vec![-1.0]);
        let (a, l) = (0.7, 0.3);
        let b = dyson_drift(&[-a, a], l).unwrap();
        assert!((b[0] - (-1.0 / (2.0 * a) + l * a)).abs() < 1e-15);
        assert!((b[1] - (1.0 / (2.0 * a) - l * a)).abs() < 1e-15);
        assert!(matches!(dyson_drift(&[1.0, 1.0], 0.1), Err(Error::SingularConfiguration { .. })));
    }

    #[test]
    fn metropolis_single_point_is_gaussian() {
        let lambda = 0.8;
        let draws = metropolis_log_gas(1, lambda, 5000, 10, RngStream::new(3, 0)).unwrap();
        let x: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let sd = (0.5 / lambda).sqrt();
        let normal = Normal::new(0.0, sd).unwrap();
        assert!(ks_one_sample(&x, |v| normal.cdf(v)).unwrap().passes(0.01));
    }

    #[test]
    fn log_gas_certified_against_metropolis() {
        let c = certify_log_gas(1.0, 5000, 0.01, RngStream::new(4, 0)).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn loggas_energy_examples() {
        assert_eq!(loggas_energy(&[1.5], 2.0), LogGasEnergy::Finite(4.5));
        assert_eq!(loggas_energy(&[0.0, 1.0], 0.0), LogGasEnergy::Finite(0.0));
        let e = loggas_energy(&[0.0, std::f64::consts::E], 0.0).value();
        assert!((e + 4.0).abs() < 1e-15);
        assert_eq!(loggas_energy(&[0.3, 0.3], 1.0), LogGasEnergy::Overflow);
    }

    proptest! {
        #[test]
        fn drift_sum_is_confinement(mut x in proptest::collection::vec(-5.0f64..5.0, 1..10), l in 0.0f64..2.0) {
            x.sort_by(f64::total_cmp);
            x.dedup();
            prop_assume!(x.windows(2).all(|w| w[1] - w[0] > 1e-6));
            let b = dyson_drift(&x, l).unwrap();
            let s: f64 = b.iter().sum();
            let want = -l * x.iter().sum::<f64>();
            prop_assert!((s - want).abs() < 1e-9 * (1.0 + b.iter().map(|v| v.abs()).sum::<f64>()));
        }

        /// The sampled density is `exp(-E(x; 2 lambda) / 2)`, so the drift is
        /// `(1/4) grad(-E(x; 2 lambda))`.
        #[test]
        fn drift_is_half_log_density_gradient(mut x in proptest::collection::vec(-3.0f64..3.0, 2..7), l in 0.05f64..1.0) {
            x.sort_by(f64::total_cmp);
            prop_assume!(x.windows(2).all(|w| w[1] - w[0] > 0.05));
            let b = dyson_drift(&x, l).unwrap();
            let h = 1e-5;
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let grad = -(loggas_energy(&xp, 2.0 * l).value() - loggas_energy(&xm, 2.0 * l).value()) / (2.0 * h);
                prop_assert!((0.25 * grad - b[i]).abs() < 1e-6, "i={} {} vs {}", i, 0.25 * grad, b[i]);
            }
        }
    }

    #[test]
    fn free_particle_increments_are_gaussian() {
        let tr = integrate_sde(
            &line(vec![0.0]),
            &DriftSpec::Dyson { lambda: 0.0 },
            1.0,
            1e-3,
            RngStream::new(1, 0),
            &IntegratorOptions {
                record_every: Some(1),
                ..IntegratorOptions::default()
            },
        )
        .unwrap();
        assert_eq!(tr.steps, 1000);
        let inc: Vec<f64> = tr
            .states
            .windows(2)
            .zip(tr.times.windows(2))
            .map(|(s, t)| (s[1].coords()[0] - s[0].coords()[0]) / (t[1] - t[0]).sqrt())
            .collect();
        let normal = Normal::new(0.0, 1.0).unwrap();
        assert!(ks_one_sample(&inc, |z| normal.cdf(z)).unwrap().passes(0.01));
    }

    #[test]
    fn immediate_hit_when_delta_exceeds_gap() {
        let tr = integrate_sde(
            &line(vec![0.0, 0.01]),
            &DriftSpec::Dyson { lambda: 1.0 },
            1.0,
            0.1,
            RngStream::new(0, 0),
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.hit_time, Some(0.0));
        assert_eq!(tr.status, PathStatus::Hit);
    }

    #[test]
    fn trajectories_stay_sorted() {
        let tr = integrate_sde(
            &line(vec![-1.0, -0.2, 0.1, 0.9]),
            &DriftSpec::Dyson { lambda: 0.5 },
            0.5,
            1e-6,
            RngStream::new(5, 0),
            &IntegratorOptions {
                record_every: Some(1),
                ..IntegratorOptions::default()
            },
        )
        .unwrap();
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        for (s, g) in tr.states.iter().zip(&tr.min_gap_series) {
            assert!(s.is_strictly_sorted());
            assert_eq!(s.min_gap().unwrap(), *g);
        }
    }

    #[test]
    fn relabelling_gives_same_path() {
        let a = line(vec![0.4, -0.3, 1.2]);
        let b = line(vec![1.2, 0.4, -0.3]);
        let drift = DriftSpec::Dyson { lambda: 0.2 };
        let opts = IntegratorOptions::default();
        let ta = integrate_sde(&a, &drift, 0.2, 1e-4, RngStream::new(3, 3), &opts).unwrap();
        let tb = integrate_sde(&b, &drift, 0.2, 1e-4, RngStream::new(3, 3), &opts).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn distorted_drift_symmetric_and_singular() {
        let k = KernelSpec::product(1.0).build().unwrap();
        let d = nystrom_decompose(&k, Interval::new(-1.0, 1.0), 64).unwrap();
        let b = distorted_drift(&d, &[0.0], 1e-3).unwrap();
        assert!(b[0].abs() < 1e-6);
        assert!(distorted_drift(&d, &[0.2, 0.2], 1e-4).is_err());
    }

    #[test]
    fn distorted_gap_drift_follows_exponent() {
        for alpha in [0.5, 1.0] {
            let k = KernelSpec::product(alpha).build().unwrap();
            let d = nystrom_decompose(&k, Interval::new(-1.0, 1.0), 128).unwrap();
            let g = 2e-3;
            let b = distorted_drift(&d, &[-0.5 * g, 0.5 * g], stencil_step(g)).unwrap();
            // sigma^2 ~ c g^alpha puts (1/2) alpha / g on each coordinate.
            let ratio = b[1] * g / (0.5 * alpha);
            assert!((b[0] + b[1]).abs() < 1e-6 * b[1]);
            assert!((ratio - 1.0).abs() < 0.15, "alpha {alpha}: {ratio}");
        }
    }

    #[test]
    fn field_determinant_matches_sigma() {
        let k = KernelSpec::product(0.5).build().unwrap();
        let d = nystrom_decompose(&k, Interval::new(-1.0, 1.0), 64).unwrap();
        let f = DensityField::new(Arc::new(d.clone())).unwrap();
        let pts = [-0.3, 0.45];
        let sigma = crate::statistics::sigma_fredholm(&d, &pts).unwrap();
        assert!((f.l_det(&pts) * d.fredholm_det().unwrap() - sigma).abs() < 1e-12);
    }

    #[test]
    fn hitting_stats_merge() {
        let a = HittingStats::new(100, 3, 0, 1e-3, 1.0);
        let b = HittingStats::new(50, 2, 1, 1e-3, 1.0);
        let m = a.merge(&b);
        assert_eq!((m.n_paths, m.n_hit, m.n_failures), (150, 5, 1));
        assert!(m.ci_low <= m.hit_fraction() && m.hit_fraction() <= m.ci_high);
        assert!(!m.inconclusive());
    }

    #[test]
    fn probe_immediate_hits() {
        let stats = collision_probe(
            &ProbeModel::Dyson { n: 4, lambda: 1.0 },
            20,
            0.1,
            1e3,
            RngStream::new(1, 1),
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert_eq!(stats.n_hit, 20);
    }

    #[test]
    fn two_particle_dyson_gap_dimension() {
        let init = line(vec![-0.005, 0.005]);
        let times = [2e-6, 5e-6, 1e-5, 2e-5];
        let fit = gap_dimension_fit(&init, 0, &DriftSpec::Dyson { lambda: 0.0 }, &times, 2000, RngStream::new(2, 0)).unwrap();
        assert!((fit.dimension - 3.0).abs() < 0.2, "{fit:?}");
    }
}
