//! Empirical one- and two-point correlations of DPP samples against the
//! determinant formulas.
//!
//! Artifacts: `rho1.csv` (equal bins over the window, with the bin-averaged
//! `K(x, x)`) and `rho2.csv` (pooled pair-distance estimates with the
//! averaged `det` oracle).

use dyson_core::statistics::{
    estimate_correlation, pair_distance_correlation, write_correlation_csv, write_pair_distance_csv,
    CorrelationEstimate, CorrelationGrid, PairDistanceEstimate,
};
use dyson_core::{sample_dpp, Configuration, KernelSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::z_score;
use crate::config::require;
use crate::{CliError, Context, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub n_samples: usize,
    pub rho1_bins: usize,
    pub pair_distances: Vec<f64>,
    pub pair_width: f64,
    /// Largest tolerated `|z|` in any bin.
    pub z_max: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            rho1_bins: 12,
            pair_distances: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            pair_width: 0.1,
            z_max: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub n_samples: usize,
    pub rho1: CorrelationEstimate,
    pub rho1_z: Vec<f64>,
    pub rho2: Vec<PairDistanceEstimate>,
    pub rho2_z: Vec<f64>,
    pub z_max: f64,
    pub passed: bool,
}

impl Report {
    pub fn status(&self) -> Status {
        Status::check(self.passed, format!("a bin deviates from the determinant by more than {} SE", self.z_max))
    }
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    require(p.n_samples >= 10, || "n_samples must be at least 10".into())?;
    require(p.rho1_bins >= 1, || "rho1_bins must be positive".into())?;
    require(p.pair_width > 0.0, || "pair_width must be positive".into())?;
    let window = ctx.config.window_or(-3.0, 3.0)?;
    for &r in &p.pair_distances {
        let (lo, hi) = (r - 0.5 * p.pair_width, r + 0.5 * p.pair_width);
        require(lo > 0.0 && hi < window.length(), || {
            format!("pair distance {r} with width {} does not fit the window", p.pair_width)
        })?;
    }
    let (_, kernel) = super::kernel(ctx, KernelSpec::sine(1.0))?;
    let d = super::decompose(ctx, &kernel, window)?;
    let stream = ctx.stream(0);
    let samples: Vec<Configuration> = (0..p.n_samples as u64)
        .into_par_iter()
        .map(|i| sample_dpp(&d, stream.substream(i)))
        .collect::<Result<_, _>>()?;

    let grid = CorrelationGrid::Single(window.cells(p.rho1_bins));
    let rho1 = estimate_correlation(&samples, &grid)?.with_oracle(&kernel)?;
    let oracle = rho1.oracle.clone().unwrap_or_default();
    let rho1_z: Vec<f64> = rho1
        .values
        .iter()
        .zip(&rho1.std_errors)
        .zip(&oracle)
        .map(|((v, se), o)| z_score(*v, *o, *se))
        .collect();
    let rho2 = p
        .pair_distances
        .iter()
        .map(|&r| pair_distance_correlation(&samples, &kernel, r, p.pair_width))
        .collect::<Result<Vec<_>, _>>()?;
    let rho2_z: Vec<f64> = rho2.iter().map(|e| z_score(e.value, e.oracle, e.std_error)).collect();

    write_correlation_csv(ctx.create("rho1.csv")?, &rho1)?;
    write_pair_distance_csv(ctx.create("rho2.csv")?, &rho2)?;
    let passed = rho1_z.iter().chain(&rho2_z).all(|z| z.abs() <= p.z_max);
    Ok(Report {
        n_samples: p.n_samples,
        rho1,
        rho1_z,
        rho2,
        rho2_z,
        z_max: p.z_max,
        passed,
    })
}
