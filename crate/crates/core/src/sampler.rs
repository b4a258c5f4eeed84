//! Exact samplers: spectral sampling of the windowed determinantal field,
//! the finite-N log-gas via Hermitian Gaussian matrices, and Poisson fields.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ensure, Error, Result};
use crate::geometry::Region;
use crate::kernels::KernelSpec;
use crate::rng::RngStream;
use crate::spectral::{SpectralDecomposition, ACTIVE_THRESHOLD};

/// Retries allowed when placing a single point.
pub const MAX_POINT_RETRIES: usize = 100;
/// Frame evaluations below this norm are treated as numerically zero.
pub const ZERO_DENSITY: f64 = 1e-12;
/// Envelope factor of the rejection step correcting the piecewise-linear
/// proposal to the exact continuous density.
const ENVELOPE: f64 = 2.0;
const MAX_EIGEN_RETRIES: usize = 3;

/// A finite point set in `R^d` together with the region it lives in.
/// One-dimensional configurations are kept sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
    window: Region,
}

impl Configuration {
    /// A configuration on the line; points are sorted.
    pub fn on_line(mut points: Vec<f64>, window: Region) -> Self {
        points.sort_by(f64::total_cmp);
        Self {
            dim: 1,
            coords: points,
            window,
        }
    }

    /// Points given as `dim`-tuples laid out contiguously.
    pub fn from_coords(dim: usize, mut coords: Vec<f64>, window: Region) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) || window.dim() != dim {
            return Err(Error::InvalidSpec("coordinate layout does not match dimension".into()));
        }
        if dim == 1 {
            coords.sort_by(f64::total_cmp);
        }
        Ok(Self {
            dim,
            coords,
            window,
        })
    }

    pub fn empty(window: Region) -> Self {
        Self {
            dim: window.dim(),
            coords: Vec::new(),
            window,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn window(&self) -> &Region {
        &self.window
    }

    /// Raw coordinates; for `d = 1` these are the sorted points.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Number of points of a line configuration in `[lo, hi)`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        debug_assert_eq!(self.dim, 1);
        let a = self.coords.partition_point(|&x| x < lo);
        let b = self.coords.partition_point(|&x| x < hi);
        b - a
    }

    /// Smallest nearest-neighbour gap of a line configuration.
    pub fn min_gap(&self) -> Option<f64> {
        (self.dim == 1)
            .then(|| self.coords.windows(2).map(|w| w[1] - w[0]).reduce(f64::min))
            .flatten()
    }

    pub fn is_strictly_sorted(&self) -> bool {
        self.dim != 1 || self.coords.windows(2).all(|w| w[0] < w[1])
    }

    /// Points as a JSON array (numbers for `d = 1`, coordinate arrays otherwise).
    pub fn to_json(&self) -> Value {
        if self.dim == 1 {
            Value::from(self.coords.clone())
        } else {
            Value::from(self.points().map(|p| p.to_vec()).collect::<Vec<_>>())
        }
    }

    pub fn from_json(value: &Value, window: Region) -> Result<Self> {
        let dim = window.dim();
        let items = value
            .as_array()
            .ok_or_else(|| Error::InvalidSpec("configuration must be a JSON array".into()))?;
        let mut coords = Vec::with_capacity(items.len() * dim);
        for item in items {
            if dim == 1 {
                coords.push(serde_json::from_value::<f64>(item.clone())?);
            } else {
                let p: Vec<f64> = serde_json::from_value(item.clone())?;
                if p.len() != dim {
                    return Err(Error::InvalidSpec("point dimension mismatch".into()));
                }
                coords.extend(p);
            }
        }
        Self::from_coords(dim, coords, window)
    }
}

/// The sub-configuration inside `window`. Idempotent.
pub fn restrict(config: &Configuration, window: &Region) -> Configuration {
    let coords = config
        .points()
        .filter(|p| window.contains(p))
        .flatten()
        .copied()
        .collect();
    Configuration {
        dim: config.dim,
        coords,
        window: window.clone(),
    }
}

/// Exact sample of the determinantal field with the discretized kernel of
/// `decomp` on its window.
///
/// Each eigenindex is retained independently with probability `lambda_i`;
/// the retained frame is then sampled point by point, projecting out the
/// direction of every chosen point.
pub fn sample_dpp(decomp: &SpectralDecomposition, stream: RngStream) -> Result<Configuration> {
    let mut rng = stream.rng();
    let retained: Vec<usize> = decomp
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| rng.random::<f64>() < l && l > ACTIVE_THRESHOLD)
        .map(|(i, _)| i)
        .collect();
    let window = Region::from(decomp.window);
    let k = retained.len();
    if k == 0 {
        return Ok(Configuration::empty(window));
    }
    let node_vals = decomp.eigenvectors.select_columns(&retained);
    let mut frame = DMatrix::<f64>::identity(k, k);
    let mut points = Vec::with_capacity(k);
    for j in 0..k {
        let point_stream = stream.substream(j as u64);
        let mut placed = None;
        for attempt in 0..MAX_POINT_RETRIES {
            let mut prng = point_stream.substream(attempt as u64).rng();
            let x = propose_point(decomp, &retained, &node_vals, &frame, &mut prng);
            if points.iter().any(|&p: &f64| (p - x).abs() <= f64::EPSILON * x.abs().max(1.0)) {
                log::warn!("tie at {x}; resampling point");
                continue;
            }
            let v = &frame * decomp.eigenfunctions_subset(x, &retained);
            if v.norm() < ZERO_DENSITY {
                continue;
            }
            placed = Some((x, v));
            break;
        }
        let (x, v) = placed.ok_or_else(|| {
            Error::SamplingFailed(format!(
                "point {j} of {k}: projected density vanished after {MAX_POINT_RETRIES} retries"
            ))
        })?;
        points.push(x);
        frame = deflate(&frame, &v);
    }
    Ok(Configuration::on_line(points, window))
}

/// Draws from `||frame * phi(x)||^2` by inverse CDF of its piecewise-linear
/// interpolant on the node grid, corrected to the exact density by rejection.
fn propose_point(
    decomp: &SpectralDecomposition,
    retained: &[usize],
    node_vals: &DMatrix<f64>,
    frame: &DMatrix<f64>,
    rng: &mut impl Rng,
) -> f64 {
    let proj = node_vals * frame.transpose();
    let dens: Vec<f64> = proj.row_iter().map(|r| r.norm_squared()).collect();
    let n = dens.len();
    let (lo, hi) = (decomp.window.lo, decomp.window.hi);
    let x = &decomp.nodes;
    // Cells: [lo, x0], [x_q, x_{q+1}], [x_{n-1}, hi]; outer cells are flat.
    let cell = |c: usize| -> (f64, f64, f64, f64) {
        if c == 0 {
            (lo, x[0], dens[0], dens[0])
        } else if c == n {
            (x[n - 1], hi, dens[n - 1], dens[n - 1])
        } else {
            (x[c - 1], x[c], dens[c - 1], dens[c])
        }
    };
    let mut cum = Vec::with_capacity(n + 1);
    let mut total = 0.0;
    for c in 0..=n {
        let (a, b, pa, pb) = cell(c);
        total += 0.5 * (b - a) * (pa + pb);
        cum.push(total);
    }
    let rows = frame.nrows() as f64;
    loop {
        let u = rng.random::<f64>() * total;
        let c = cum.partition_point(|&m| m <= u).min(n);
        let (a, b, pa, pb) = cell(c);
        let s: f64 = rng.random();
        let denom = pa + (pa * pa + s * (pb * pb - pa * pa)).max(0.0).sqrt();
        let t = if denom > 0.0 { s * (pa + pb) / denom } else { s };
        let xs = (a + t * (b - a)).clamp(lo, hi);
        let lin = pa + t * (pb - pa);
        let exact = (frame * decomp.eigenfunctions_subset(xs, retained)).norm_squared();
        let ratio = if lin > 0.0 { exact * total / (rows * lin) } else { f64::INFINITY };
        if rng.random::<f64>() * ENVELOPE <= ratio {
            return xs;
        }
    }
}

/// Orthonormal rows spanning the frame functions that vanish at the chosen
/// point, where `v` is the frame evaluated there. A Householder reflection
/// sends `v / |v|` to `e_1`; the rows after the first are kept.
fn deflate(frame: &DMatrix<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let k = frame.nrows();
    if k == 1 {
        return DMatrix::zeros(0, frame.ncols());
    }
    let mut w = v / v.norm();
    w[0] -= 1.0;
    let wn = w.norm();
    let reflected = if wn < 1e-14 {
        frame.clone()
    } else {
        w /= wn;
        let wt_f = w.transpose() * frame;
        frame - 2.0 * &w * wt_f
    };
    reflected.rows(1, k - 1).into_owned()
}

/// Confinement strength giving the log-gas a bulk density `density` at the
/// origin: the semicircle of `exp(-lambda Tr H^2)` has height
/// `sqrt(2 N lambda) / pi` there.
pub fn confinement(n: usize, density: f64) -> f64 {
    PI * PI * density * density / (2.0 * n as f64)
}

/// `2 (pi density)^3 / (3 N^2)`, the scaling written alongside the log-gas
/// convergence statement. Its one-point density at the origin decays with N.
pub fn confinement_cubic(n: usize, density: f64) -> f64 {
    2.0 * (PI * density).powi(3) / (3.0 * (n * n) as f64)
}

/// `N` points from `prod |x_i - x_j|^2 exp(-lambda sum x^2)` with the
/// confinement of [`confinement`].
pub fn sample_log_gas(n: usize, density: f64, stream: RngStream) -> Result<Configuration> {
    ensure(density > 0.0 && density <= 1.0, "density", density, "must lie in (0, 1]")?;
    sample_log_gas_with(n, confinement(n.max(1), density), stream)
}

/// Eigenvalues of a Hermitian matrix with density `∝ exp(-lambda Tr H^2)`:
/// real diagonal `N(0, 1/(2 lambda))`, off-diagonal real and imaginary
/// parts `N(0, 1/(4 lambda))`.
pub fn sample_log_gas_with(n: usize, lambda: f64, stream: RngStream) -> Result<Configuration> {
    ensure(n >= 1, "N", n as f64, "must be at least 1")?;
    ensure(lambda > 0.0 && lambda.is_finite(), "lambda", lambda, "must be positive")?;
    let sd_diag = (0.5 / lambda).sqrt();
    let sd_off = (0.25 / lambda).sqrt();
    for attempt in 0..MAX_EIGEN_RETRIES {
        let mut rng = stream.substream(attempt as u64).rng();
        let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 0..n {
            let d: f64 = rng.sample(StandardNormal);
            h[(i, i)] = Complex::new(sd_diag * d, 0.0);
            for j in 0..i {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let z = Complex::new(sd_off * re, sd_off * im);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let Some(eig) = SymmetricEigen::try_new(h, f64::EPSILON, 0) else {
            continue;
        };
        let config = Configuration::on_line(eig.eigenvalues.iter().copied().collect(), Region::whole_line());
        if config.is_strictly_sorted() {
            return Ok(config);
        }
        log::warn!("tie in log-gas sample; redrawing");
    }
    Err(Error::SamplingFailed(format!(
        "log-gas eigensolve failed {MAX_EIGEN_RETRIES} times"
    )))
}

/// Exact one-point density of the `N`-point log-gas with confinement
/// `lambda`, `sqrt(lambda) sum_{k<N} psi_k(sqrt(lambda) x)^2` with `psi_k`
/// the orthonormal Hermite functions.
pub fn log_gas_density(n: usize, lambda: f64, x: f64) -> f64 {
    let s = lambda.sqrt();
    let u = s * x;
    let mut prev = PI.powf(-0.25) * (-0.5 * u * u).exp();
    let mut total = prev * prev;
    if n < 2 {
        return s * total * n as f64;
    }
    let mut cur = std::f64::consts::SQRT_2 * u * prev;
    total += cur * cur;
    for k in 2..n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * u * cur - ((kf - 1.0) / kf).sqrt() * prev;
        total += next * next;
        prev = cur;
        cur = next;
    }
    s * total
}

/// Poisson field with constant `intensity` on a box.
pub fn sample_poisson(intensity: f64, region: &Region, stream: RngStream) -> Result<Configuration> {
    ensure(intensity > 0.0 && intensity.is_finite(), "intensity", intensity, "must be positive")?;
    let mean = intensity * region.volume();
    let mut rng = stream.rng();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|_| Error::SamplingFailed(format!("Poisson mean {mean}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let dim = region.dim();
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for (a, b) in region.lo.iter().zip(&region.hi) {
            coords.push(a + (b - a) * rng.random::<f64>());
        }
    }
    Configuration::from_coords(dim, coords, region.clone())
}

/// First record of a batch file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchHeader {
    pub sampler: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    pub window: Region,
    pub seed: u64,
    pub n_samples: usize,
}

/// Newline-delimited JSON: the header, then one configuration per line.
pub fn write_batch<W: Write>(mut out: W, header: &BatchHeader, configs: &[Configuration]) -> Result<()> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for c in configs {
        serde_json::to_writer(&mut out, &c.to_json())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_batch<R: BufRead>(input: R) -> Result<(BatchHeader, Vec<Configuration>)> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::InvalidSpec("batch file is empty".into()))??;
    let header: BatchHeader = serde_json::from_str(&first)?;
    let mut configs = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line)?;
        configs.push(Configuration::from_json(&v, header.window.clone())?);
    }
    Ok((header, configs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use crate::inference::{chi_square_counts, ks_two_sample, mean_sd, poisson_binomial_pmf};
    use crate::kernels::{Kernel, KernelSpec};
    use crate::spectral::nystrom_decompose;

    fn sine_decomp() -> SpectralDecomposition {
        let k = KernelSpec::sine(1.0).build().unwrap();
        nystrom_decompose(&k, Interval::new(-3.0, 3.0), 128).unwrap()
    }

    fn bump(x: f64) -> f64 {
        if x.abs() >= 1.0 {
            0.0
        } else {
            (15.0f64 / 16.0).sqrt() * (1.0 - x * x)
        }
    }

    #[test]
    fn zero_kernel_gives_empty() {
        let d = nystrom_decompose(&Kernel::zero(), Interval::new(-1.0, 1.0), 16).unwrap();
        for s in 0..20 {
            assert!(sample_dpp(&d, RngStream::new(1, s)).unwrap().is_empty());
        }
    }

    #[test]
    fn rank_one_histogram_matches_density() {
        let k = Kernel::from_fn("bump", |x, y| bump(x) * bump(y));
        let d = nystrom_decompose(&k, Interval::new(-1.0, 1.0), 48).unwrap();
        let n = 10_000;
        let bins = 10;
        let mut hist = vec![0u64; bins];
        for s in 0..n {
            let c = sample_dpp(&d, RngStream::new(5, s)).unwrap();
            assert_eq!(c.len(), 1);
            let x = c.coords()[0];
            hist[(((x + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1)] += 1;
        }
        // Bin mass of (15/16)(1 - x^2)^2 from its antiderivative.
        let cdf = |x: f64| 15.0 / 16.0 * (x - 2.0 * x.powi(3) / 3.0 + x.powi(5) / 5.0);
        for (b, &h) in hist.iter().enumerate() {
            let a = -1.0 + 0.2 * b as f64;
            let p = cdf(a + 0.2) - cdf(a);
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((h as f64 - n as f64 * p).abs() < 3.0 * sd + 1.0, "bin {b}: {h} vs {}", n as f64 * p);
        }
    }

    #[test]
    fn sine_count_mean_and_variance() {
        let d = sine_decomp();
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|s| sample_dpp(&d, RngStream::new(11, s)).unwrap().len() as f64)
            .collect();
        let (m, sd) = mean_sd(&counts);
        let var = sd * sd;
        let mu = d.trace();
        let v = d.count_variance();
        // Fourth central moment of a Bernoulli sum bounds the variance of the sample variance.
        let m4: f64 = d
            .eigenvalues
            .iter()
            .map(|l| l * (1.0 - l) * (1.0 - 3.0 * l * (1.0 - l)))
            .sum::<f64>()
            + 3.0 * v * v;
        let se_var = ((m4 - v * v) / n as f64).sqrt();
        assert!((m - mu).abs() < 3.0 * (v / n as f64).sqrt(), "mean {m} vs {mu}");
        assert!((var - v).abs() < 3.0 * se_var, "var {var} vs {v}");
    }

    #[test]
    fn sine_points_sorted_inside_window() {
        let d = sine_decomp();
        for s in 0..200 {
            let c = sample_dpp(&d, RngStream::new(3, s)).unwrap();
            assert!(c.is_strictly_sorted());
            assert!(c.coords().iter().all(|&x| (-3.0..=3.0).contains(&x)));
        }
    }

    #[test]
    fn count_law_small_run() {
        let k = KernelSpec::product(1.0).build().unwrap();
        let d = nystrom_decompose(&k, Interval::new(-3.0, 3.0), 96).unwrap();
        let mut obs = vec![0u64; 40];
        for s in 0..2000 {
            obs[sample_dpp(&d, RngStream::new(2, s)).unwrap().len()] += 1;
        }
        let pmf = poisson_binomial_pmf(&d.eigenvalues);
        assert!(chi_square_counts(&obs, &pmf).unwrap().passes(0.01));
    }

    #[test]
    fn dpp_deterministic() {
        let d = sine_decomp();
        let a = sample_dpp(&d, RngStream::new(9, 4)).unwrap();
        let b = sample_dpp(&d, RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sine_negative_association() {
        let d = sine_decomp();
        let n = 4000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|s| {
                let c = sample_dpp(&d, RngStream::new(21, s)).unwrap();
                (c.count_in(-3.0, 0.0) as f64, c.count_in(0.0, 3.1) as f64)
            })
            .collect();
        let (ma, _) = mean_sd(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        let (mb, _) = mean_sd(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        let prods: Vec<f64> = pairs.iter().map(|(a, b)| (a - ma) * (b - mb)).collect();
        let (cov, sd) = mean_sd(&prods);
        assert!(cov <= 3.0 * sd / (n as f64).sqrt(), "cov {cov}");
    }

    #[test]
    fn log_gas_single_point_variance() {
        let lambda = confinement(1, 1.0);
        let xs: Vec<f64> = (0..20_000)
            .map(|s| sample_log_gas(1, 1.0, RngStream::new(4, s)).unwrap().coords()[0])
            .collect();
        let (_, sd) = mean_sd(&xs);
        let want = 0.5 / lambda;
        // Relative standard error of a Gaussian sample variance: sqrt(2/n).
        assert!((sd * sd / want - 1.0).abs() < 3.0 * (2.0f64 / 20_000.0).sqrt());
    }

    type Stat = fn(&(f64, f64)) -> f64;

    /// Metropolis chain on `prod |dx|^2 exp(-lambda sum x^2)` for two points.
    fn metropolis_pair(lambda: f64, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let log_p = |a: f64, b: f64| 2.0 * (a - b).abs().ln() - lambda * (a * a + b * b);
        let mut rng = RngStream::new(seed, 0).rng();
        let (mut a, mut b) = (-0.5, 0.5);
        let mut lp = log_p(a, b);
        let scale = (0.5 / lambda).sqrt();
        let mut out = Vec::with_capacity(n);
        let thin = 20;
        for step in 0..(n + 500) * thin {
            let na = a + scale * rng.sample::<f64, _>(StandardNormal);
            let nb = b + scale * rng.sample::<f64, _>(StandardNormal);
            let nlp = log_p(na, nb);
            if rng.random::<f64>().ln() < nlp - lp {
                (a, b, lp) = (na, nb, nlp);
            }
            if step >= 500 * thin && step % thin == 0 {
                out.push((a.min(b), a.max(b)));
            }
        }
        out
    }

    #[test]
    fn log_gas_pair_matches_metropolis() {
        let lambda = confinement(2, 1.0);
        let n = 10_000;
        let direct: Vec<(f64, f64)> = (0..n)
            .map(|s| {
                let c = sample_log_gas(2, 1.0, RngStream::new(8, s)).unwrap();
                (c.coords()[0], c.coords()[1])
            })
            .collect();
        let mcmc = metropolis_pair(lambda, n as usize, 99);
        let stats: [Stat; 3] = [|p| p.0, |p| p.1, |p| p.1 - p.0];
        for f in stats {
            let a: Vec<f64> = direct.iter().map(f).collect();
            let b: Vec<f64> = mcmc.iter().map(f).collect();
            let t = ks_two_sample(&a, &b).unwrap();
            assert!(t.passes(0.01), "{t:?}");
        }
    }

    #[test]
    fn log_gas_sign_symmetric_and_gapped() {
        let mut xs = Vec::new();
        for s in 0..2000 {
            let c = sample_log_gas(5, 1.0, RngStream::new(6, s)).unwrap();
            assert!(c.min_gap().unwrap() > 0.0);
            xs.extend_from_slice(c.coords());
        }
        let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!(ks_two_sample(&xs, &flipped).unwrap().passes(0.01));
    }

    #[test]
    fn log_gas_density_normalized() {
        let gl = crate::quadrature::GaussLegendre::new(200, Interval::new(-12.0, 12.0)).unwrap();
        for n in [1usize, 2, 5, 8] {
            let mass = gl.integrate(|x| log_gas_density(n, confinement(n, 1.0), x));
            assert!((mass - n as f64).abs() < 1e-10, "N={n}: {mass}");
        }
        let l = 0.7;
        let x = 0.4;
        let gauss = (l / PI).sqrt() * (-l * x * x).exp();
        assert!((log_gas_density(1, l, x) - gauss).abs() < 1e-15);
        // Frozen from an independent Hermite-polynomial evaluation.
        let d = log_gas_density(8, confinement(8, 1.0), 0.0);
        assert!((d - (1.0 - 0.030689300286045995)).abs() < 1e-12, "{d}");
    }

    #[test]
    fn log_gas_histogram_matches_density() {
        let n = 4;
        let lambda = confinement(n, 1.0);
        let draws = 20_000u64;
        let edges: Vec<f64> = (0..=8).map(|k| -3.0 + 0.75 * k as f64).collect();
        let mut counts = [0.0; 8];
        for s in 0..draws {
            let c = sample_log_gas(n, 1.0, RngStream::new(12, s)).unwrap();
            for (k, w) in edges.windows(2).enumerate() {
                counts[k] += c.count_in(w[0], w[1]) as f64;
            }
        }
        for (k, w) in edges.windows(2).enumerate() {
            let gl = crate::quadrature::GaussLegendre::new(24, Interval::new(w[0], w[1])).unwrap();
            let want = gl.integrate(|x| log_gas_density(n, lambda, x)) * draws as f64;
            assert!((counts[k] - want).abs() < 4.0 * want.sqrt(), "bin {k}: {} vs {want}", counts[k]);
        }
    }

    #[test]
    fn confinement_matches_semicircle_height() {
        for n in [4usize, 16, 64] {
            let l = confinement(n, 0.8);
            assert!(((2.0 * n as f64 * l).sqrt() / PI - 0.8).abs() < 1e-14);
        }
    }

    #[test]
    fn poisson_counts() {
        let cube = Region::cube(3, 0.0, 1.0);
        let n = 10_000;
        let c1: Vec<f64> = (0..n)
            .map(|s| sample_poisson(1.0, &cube, RngStream::new(1, s)).unwrap().len() as f64)
            .collect();
        let (m, _) = mean_sd(&c1);
        assert!((m - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
        let c2: Vec<f64> = (0..n)
            .map(|s| sample_poisson(2.0, &cube, RngStream::new(2, s)).unwrap().len() as f64)
            .collect();
        let (_, sd) = mean_sd(&c2);
        // Var of the sample variance of Poisson(mu): (mu + 2 mu^2) / n.
        assert!((sd * sd - 2.0).abs() < 3.0 * (10.0 / n as f64).sqrt());
        let empty = Region::cube(3, 0.5, 0.5);
        assert!(sample_poisson(5.0, &empty, RngStream::new(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn restrict_examples() {
        let w = Region::from(Interval::new(-3.0, 3.0));
        let c = Configuration::on_line(vec![2.7, -2.0, 0.5], w.clone());
        assert_eq!(restrict(&c, &w), c);
        let inner = Region::from(Interval::new(-1.0, 1.0));
        assert_eq!(restrict(&c, &inner).coords(), &[0.5]);
        let r = restrict(&c, &inner);
        assert_eq!(restrict(&r, &inner), r);
        assert!(restrict(&c, &Region::from(Interval::new(5.0, 5.0))).is_empty());
    }

    #[test]
    fn batch_round_trip() {
        let cube = Region::cube(2, 0.0, 1.0);
        let configs: Vec<Configuration> = (0..5)
            .map(|s| sample_poisson(3.0, &cube, RngStream::new(1, s)).unwrap())
            .collect();
        let header = BatchHeader {
            sampler: "poisson".into(),
            kernel: None,
            window: cube,
            seed: 1,
            n_samples: 5,
        };
        let mut buf = Vec::new();
        write_batch(&mut buf, &header, &configs).unwrap();
        let (h, back) = read_batch(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, configs);
    }
}
