//! Monte Carlo energies of the pair-sum cut-off functions, either for a DPP
//! on the line with a `C / |log eps|` fit, or for a Poisson field in a box
//! against the pair-counting oracle.
//!
//! Artifacts: `capacity.csv` and `capacity.json`.

use dyson_core::capacity::{
    decay_fit, estimate_on_batch, poisson_pair_energy_oracle, write_capacity_csv, DecayFit, SamplerHandle,
};
use dyson_core::{CapacityEstimate, KernelSpec, Region, Variant};
use serde::{Deserialize, Serialize};

use crate::config::{checked_region, require};
use crate::{CliError, Context, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Dpp,
    Poisson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub sampler: Sampler,
    pub n_samples: usize,
    pub eps: Vec<f64>,
    /// Log cut-off for the DPP, linear for Poisson unless set.
    pub variant: Option<Variant>,
    /// Points outside are ignored; `[-2, 2]` for the DPP, the region for Poisson.
    pub inner_window: Option<Region>,
    pub intensity: f64,
    /// Poisson region; the unit cube in `dim` dimensions by default.
    pub region: Option<Region>,
    pub dim: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            sampler: Sampler::Dpp,
            n_samples: 2000,
            eps: vec![1e-2, 1e-3, 1e-4, 1e-5],
            variant: None,
            inner_window: None,
            intensity: 100.0,
            region: None,
            dim: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub eps: f64,
    pub energy: f64,
    pub oracle: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub sampler: Sampler,
    pub variant: Variant,
    pub estimates: Vec<CapacityEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub oracle: Vec<OracleRow>,
    /// Energies shrink with `eps`.
    pub decreasing: bool,
    /// Every oracle ratio lies in `[1/2, 2]`; `None` without an oracle.
    pub oracle_ok: Option<bool>,
}

impl Report {
    pub fn status(&self) -> Status {
        if let Some(f) = &self.fit {
            if f.inconclusive {
                return Status::Inconclusive("energies are not monotone in eps within their intervals".into());
            }
            if !f.certified {
                return Status::Failed(format!("C / |log eps| fit residual {:.3} is too large", f.residual));
            }
        }
        if self.oracle_ok == Some(false) {
            return Status::Failed("energies differ from the pair-counting oracle by more than a factor 2".into());
        }
        Status::check(self.decreasing, "energies do not decrease with eps")
    }
}

fn is_unit_cube(r: &Region) -> bool {
    r.dim() == 3 && r.lo.iter().all(|&a| a == 0.0) && r.hi.iter().all(|&b| b == 1.0)
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    require(p.n_samples >= 10, || "n_samples must be at least 10".into())?;
    require(!p.eps.is_empty() && p.eps.iter().all(|&e| e > 0.0), || "eps values must be positive".into())?;
    let mut eps = p.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let (handle, inner, variant) = match p.sampler {
        Sampler::Dpp => {
            let window = ctx.config.window_or(-3.0, 3.0)?;
            let (_, kernel) = super::kernel(ctx, KernelSpec::sine(1.0))?;
            let d = super::decompose(ctx, &kernel, window)?;
            let inner = match &p.inner_window {
                Some(r) => checked_region(r)?,
                None => Region::from(dyson_core::Interval::new(-2.0, 2.0)),
            };
            require(inner.dim() == 1, || "inner window must be one-dimensional".into())?;
            (SamplerHandle::Dpp(d), inner, p.variant.unwrap_or(Variant::Log))
        }
        Sampler::Poisson => {
            require(p.intensity >= 0.0 && p.dim >= 1, || "need intensity >= 0 and dim >= 1".into())?;
            let region = match &p.region {
                Some(r) => checked_region(r)?,
                None => Region::cube(p.dim, 0.0, 1.0),
            };
            let inner = match &p.inner_window {
                Some(r) => checked_region(r)?,
                None => region.clone(),
            };
            require(inner.dim() == region.dim(), || "inner window dimension mismatch".into())?;
            let handle = SamplerHandle::Poisson {
                intensity: p.intensity,
                region,
            };
            (handle, inner, p.variant.unwrap_or(Variant::Linear))
        }
    };
    if variant == Variant::Log {
        require(eps.iter().all(|&e| e < 1.0), || "log cut-off needs eps < 1".into())?;
    }

    let samples = handle.batch(p.n_samples, ctx.stream(0))?;
    let estimates = eps
        .iter()
        .map(|&e| estimate_on_batch(&samples, e, &inner, variant))
        .collect::<Result<Vec<_>, _>>()?;
    let (fit, fit_error) = match p.sampler {
        Sampler::Dpp => match decay_fit(&estimates) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
        Sampler::Poisson => (None, None),
    };
    let oracle: Vec<OracleRow> = match &handle {
        SamplerHandle::Poisson { intensity, region }
            if variant == Variant::Linear && is_unit_cube(region) && inner == *region =>
        {
            estimates
                .iter()
                .filter(|e| 2.0 * e.eps <= 1.0)
                .map(|e| {
                    let o = poisson_pair_energy_oracle(*intensity, e.eps)?;
                    Ok(OracleRow {
                        eps: e.eps,
                        energy: e.energy,
                        oracle: o,
                        ratio: e.energy / o,
                    })
                })
                .collect::<Result<_, CliError>>()?
        }
        _ => Vec::new(),
    };
    let oracle_ok = (!oracle.is_empty()).then(|| oracle.iter().all(|r| (0.5..=2.0).contains(&r.ratio)));
    let decreasing = estimates.windows(2).all(|w| w[1].energy < w[0].energy);

    write_capacity_csv(ctx.create("capacity.csv")?, &estimates, fit.as_ref())?;
    let report = Report {
        sampler: p.sampler,
        variant,
        estimates,
        fit,
        fit_error,
        oracle,
        decreasing,
        oracle_ok,
    };
    ctx.write_json("capacity.json", &report)?;
    Ok(report)
}
