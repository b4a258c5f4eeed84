//! Batches of equilibrium configurations.
//!
//! Artifact: `samples.ndjson`, a header line followed by one configuration
//! per line.

use dyson_core::sampler::{confinement, sample_log_gas, write_batch, BatchHeader};
use dyson_core::{sample_dpp, sample_poisson, Configuration, KernelSpec, Region};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{checked_region, require};
use crate::{CliError, Context, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Dpp,
    LogGas,
    Poisson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub sampler: Sampler,
    pub n_samples: usize,
    /// Particle number of the log-gas.
    pub n: usize,
    /// Bulk density the log-gas is scaled to.
    pub density: f64,
    /// Poisson intensity.
    pub intensity: f64,
    /// Poisson region; defaults to the window.
    pub region: Option<Region>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            sampler: Sampler::Dpp,
            n_samples: 100,
            n: 8,
            density: 1.0,
            intensity: 1.0,
            region: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub sampler: Sampler,
    pub n_samples: usize,
    pub mean_count: f64,
    pub count_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_variance: Option<f64>,
}

impl Report {
    pub fn status(&self) -> Status {
        Status::Passed
    }
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    require(p.n_samples > 0, || "n_samples must be positive".into())?;
    let stream = ctx.stream(0);
    let window = ctx.config.window_or(-3.0, 3.0)?;
    let (kernel_spec, configs, expected, region) = match p.sampler {
        Sampler::Dpp => {
            let (spec, kernel) = super::kernel(ctx, KernelSpec::sine(1.0))?;
            let d = super::decompose(ctx, &kernel, window)?;
            let configs: Vec<Configuration> = (0..p.n_samples as u64)
                .into_par_iter()
                .map(|i| sample_dpp(&d, stream.substream(i)))
                .collect::<Result<_, _>>()?;
            (Some(spec), configs, Some((d.trace(), d.count_variance())), Region::from(window))
        }
        Sampler::LogGas => {
            require(p.n >= 1, || "log-gas needs n >= 1".into())?;
            require(p.density > 0.0, || "density must be positive".into())?;
            let configs: Vec<Configuration> = (0..p.n_samples as u64)
                .into_par_iter()
                .map(|i| sample_log_gas(p.n, p.density, stream.substream(i)))
                .collect::<Result<_, _>>()?;
            (None, configs, Some((p.n as f64, 0.0)), Region::whole_line())
        }
        Sampler::Poisson => {
            require(p.intensity >= 0.0, || "intensity must be non-negative".into())?;
            let region = match &p.region {
                Some(r) => checked_region(r)?,
                None => Region::from(window),
            };
            let configs: Vec<Configuration> = (0..p.n_samples as u64)
                .into_par_iter()
                .map(|i| sample_poisson(p.intensity, &region, stream.substream(i)))
                .collect::<Result<_, _>>()?;
            let m = p.intensity * region.volume();
            (None, configs, Some((m, m)), region)
        }
    };
    let counts: Vec<f64> = configs.iter().map(|c| c.len() as f64).collect();
    let n = counts.len() as f64;
    let mean_count = counts.iter().sum::<f64>() / n;
    let count_variance = counts.iter().map(|c| (c - mean_count).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let header = BatchHeader {
        sampler: serde_json::to_value(p.sampler)?.as_str().unwrap_or("dpp").to_string(),
        kernel: kernel_spec,
        window: region,
        seed: ctx.seed,
        n_samples: p.n_samples,
    };
    let mut w = ctx.create("samples.ndjson")?;
    write_batch(&mut w, &header, &configs)?;
    std::io::Write::flush(&mut w)?;
    if p.sampler == Sampler::LogGas {
        log::info!("log-gas confinement lambda = {}", confinement(p.n, p.density));
    }
    Ok(Report {
        sampler: p.sampler,
        n_samples: p.n_samples,
        mean_count,
        count_variance,
        expected_mean: expected.map(|e| e.0),
        expected_variance: expected.map(|e| e.1),
    })
}
