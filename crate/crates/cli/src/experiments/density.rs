//! Janossy densities two ways, the void probability against sampling, and
//! the `0 <= sigma <= rho` bounds with the small-gap exponent.
//!
//! Artifacts: `density.csv`, `void.json`, `bounds.json`.

use dyson_core::statistics::{
    density_crosscheck, sigma_fredholm, verify_sigma_bounds, write_density_csv, DensityValue, SeriesOptions,
    SigmaBoundReport,
};
use dyson_core::{sample_dpp, Interval, KernelSpec, RngStream};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::z_score;
use crate::config::require;
use crate::{CliError, Context, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Random tuples compared; tuple `i` has `orders[i % orders.len()]` points.
    pub n_tuples: usize,
    pub orders: Vec<usize>,
    pub k_max: usize,
    /// DPP samples for the void check; zero skips it.
    pub void_samples: usize,
    /// Random tuples for the bound check.
    pub bound_tuples: usize,
    pub exact_limit: u64,
    pub qmc_points: u64,
    pub qmc_shifts: u64,
}

impl Default for Params {
    fn default() -> Self {
        let s = SeriesOptions::default();
        Self {
            n_tuples: 20,
            orders: vec![0, 1, 2],
            k_max: 6,
            void_samples: 10_000,
            bound_tuples: 40,
            exact_limit: s.exact_limit,
            qmc_points: s.qmc_points,
            qmc_shifts: s.qmc_shifts,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VoidCheck {
    pub n_samples: usize,
    pub sigma0: f64,
    pub empty_fraction: f64,
    pub std_error: f64,
    pub z: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub rows: Vec<DensityValue>,
    pub all_agree: bool,
    /// Largest `|series - fredholm| / tolerance`.
    pub worst_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub void: Option<VoidCheck>,
    pub bounds: SigmaBoundReport,
    pub passed: bool,
}

impl Report {
    pub fn status(&self) -> Status {
        Status::check(self.passed, "density evaluations, void probability or bounds disagree")
    }
}

fn random_tuple(rng: &mut impl Rng, n: usize, window: Interval) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| window.lo + window.length() * rng.random::<f64>()).collect();
    x.sort_by(f64::total_cmp);
    x
}

fn tuples(stream: RngStream, count: usize, orders: &[usize], window: Interval) -> Vec<Vec<f64>> {
    let mut rng = stream.rng();
    (0..count)
        .map(|i| random_tuple(&mut rng, orders[i % orders.len()], window))
        .collect()
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    require(!p.orders.is_empty(), || "orders must not be empty".into())?;
    require(p.orders.iter().all(|&n| n <= 4), || "orders above 4 are not supported".into())?;
    require(p.qmc_shifts >= 2 && p.qmc_points >= p.qmc_shifts, || {
        "need qmc_shifts >= 2 and qmc_points >= qmc_shifts".into()
    })?;
    require(p.k_max + p.orders.iter().max().copied().unwrap_or(0) <= 16, || {
        "k_max plus the order must stay within 16".into()
    })?;
    let window = ctx.config.window_or(-1.0, 1.0)?;
    let (_, kernel) = super::kernel(ctx, KernelSpec::product(0.5))?;
    let d = super::decompose(ctx, &kernel, window)?;
    let opts = SeriesOptions {
        exact_limit: p.exact_limit,
        qmc_points: p.qmc_points,
        qmc_shifts: p.qmc_shifts,
        seed: ctx.seed,
    };

    let mut rows: Vec<DensityValue> = Vec::with_capacity(p.n_tuples);
    for pts in tuples(ctx.stream(1), p.n_tuples, &p.orders, window) {
        let row = match rows.iter().find(|r| r.points == pts) {
            Some(r) => r.clone(),
            None => density_crosscheck(&d, &pts, p.k_max, &opts)?,
        };
        rows.push(row);
    }
    let worst_ratio = rows
        .iter()
        .map(|r| (r.value_series - r.value_fredholm).abs() / r.tolerance())
        .fold(0.0, f64::max);
    let all_agree = rows.iter().all(DensityValue::agrees);
    write_density_csv(ctx.create("density.csv")?, &rows)?;

    let void = if p.void_samples > 0 {
        let stream = ctx.stream(2);
        let empty = (0..p.void_samples as u64)
            .into_par_iter()
            .map(|i| sample_dpp(&d, stream.substream(i)).map(|c| c.is_empty()))
            .collect::<Result<Vec<bool>, _>>()?
            .into_iter()
            .filter(|&e| e)
            .count();
        let sigma0 = sigma_fredholm(&d, &[])?;
        let n = p.void_samples as f64;
        let empty_fraction = empty as f64 / n;
        let std_error = (sigma0 * (1.0 - sigma0) / n).sqrt();
        let z = z_score(empty_fraction, sigma0, std_error);
        let v = VoidCheck {
            n_samples: p.void_samples,
            sigma0,
            empty_fraction,
            std_error,
            z,
            passed: z.abs() <= 3.0,
        };
        ctx.write_json("void.json", &v)?;
        Some(v)
    } else {
        None
    };

    let bound_orders = [1, 2, 3];
    let bounds = verify_sigma_bounds(&d, &tuples(ctx.stream(3), p.bound_tuples, &bound_orders, window))?;
    ctx.write_json("bounds.json", &bounds)?;
    let passed = all_agree && void.as_ref().is_none_or(|v| v.passed) && bounds.passed;
    Ok(Report {
        rows,
        all_agree,
        worst_ratio,
        void,
        bounds,
        passed,
    })
}
