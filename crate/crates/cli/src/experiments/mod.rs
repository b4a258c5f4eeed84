//! One module per experiment. Each exposes a `Params` type read from the
//! config's `params` object, a `run` function writing artifacts into the
//! [`Context`] and returning a typed report, and the report's verdict.

pub mod capacity;
pub mod convergence;
pub mod correlations;
pub mod density;
pub mod dynamics;
pub mod sample;
pub mod validate;

use std::sync::Arc;

use dyson_core::{nystrom_decompose, Interval, Kernel, KernelSpec, SpectralDecomposition};
use serde::Serialize;

use crate::config::Experiment;
use crate::{plot, CliError, Context, RunOutcome, Status};

/// Parses the params of `experiment`, runs it and collects the outcome.
pub fn dispatch(experiment: Experiment, ctx: &mut Context) -> Result<RunOutcome, CliError> {
    let (status, summary) = match experiment {
        Experiment::Validate => {
            let p = ctx.config.params()?;
            finish(validate::run(ctx, &p)?, validate::Report::status)
        }
        Experiment::Sample => {
            let p = ctx.config.params()?;
            finish(sample::run(ctx, &p)?, sample::Report::status)
        }
        Experiment::Correlations => {
            let p = ctx.config.params()?;
            finish(correlations::run(ctx, &p)?, correlations::Report::status)
        }
        Experiment::DensityCrosscheck => {
            let p = ctx.config.params()?;
            finish(density::run(ctx, &p)?, density::Report::status)
        }
        Experiment::Convergence => {
            let p = ctx.config.params()?;
            finish(convergence::run(ctx, &p)?, convergence::Report::status)
        }
        Experiment::Dynamics => {
            let p = ctx.config.params()?;
            finish(dynamics::run(ctx, &p)?, dynamics::Report::status)
        }
        Experiment::Capacity => {
            let p = ctx.config.params()?;
            finish(capacity::run(ctx, &p)?, capacity::Report::status)
        }
        Experiment::Plot => {
            let p = ctx.config.params()?;
            finish(plot::run(ctx, &p)?, |_| Status::Passed)
        }
    }?;
    Ok(RunOutcome {
        status,
        summary,
        artifacts: ctx.artifacts().to_vec(),
    })
}

fn finish<R: Serialize>(report: R, status: impl Fn(&R) -> Status) -> Result<(Status, serde_json::Value), CliError> {
    Ok((status(&report), serde_json::to_value(&report)?))
}

/// Builds the configured kernel, falling back to `default`.
pub(crate) fn kernel(ctx: &Context, default: KernelSpec) -> Result<(KernelSpec, Kernel), CliError> {
    let spec = ctx.config.kernel_or(default);
    let kernel = spec.build()?;
    Ok((spec, kernel))
}

pub(crate) fn decompose(ctx: &Context, kernel: &Kernel, window: Interval) -> Result<Arc<SpectralDecomposition>, CliError> {
    Ok(Arc::new(nystrom_decompose(kernel, window, ctx.config.n_nodes()?)?))
}

/// Two-sided z-score, zero when both the difference and the error vanish.
pub(crate) fn z_score(value: f64, target: f64, se: f64) -> f64 {
    let d = value - target;
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        f64::INFINITY.copysign(d)
    }
}
