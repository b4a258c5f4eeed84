//! Kernel hypothesis checks and a spectral snapshot.
//!
//! Artifacts: `validation.json`, plus `spectral.json` (the decomposition
//! dump) when the kernel passes.

use dyson_core::kernels::{holder_envelope_check, HolderConstants, ValidationReport};
use dyson_core::spectral::EIGEN_TOL;
use dyson_core::{nystrom_decompose, validate_kernel, KernelSpec};
use serde::{Deserialize, Serialize};

use crate::config::require;
use crate::{CliError, Context, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Slack on `0 <= lambda <= 1`.
    pub tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { tol: EIGEN_TOL }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    pub n_nodes: usize,
    pub trace: f64,
    pub max_eigenvalue: f64,
    pub count_variance: f64,
    pub void_probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub kernel: KernelSpec,
    pub checks: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSummary>,
    pub passed: bool,
}

impl Report {
    pub fn status(&self) -> Status {
        Status::check(self.passed, "kernel fails symmetry or 0 <= K <= 1")
    }
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    require(p.tol > 0.0, || format!("tol = {} must be positive", p.tol))?;
    let window = ctx.config.window_or(-3.0, 3.0)?;
    let n_nodes = ctx.config.n_nodes()?;
    let (spec, kernel) = super::kernel(ctx, KernelSpec::sine(1.0))?;
    let checks = validate_kernel(&kernel, window, p.tol)?;
    let (holder, holder_error) = match kernel.product_alpha() {
        Some(alpha) => match holder_envelope_check(&kernel, alpha) {
            Ok(h) => (Some(h), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };
    let mut passed = checks.passed && holder_error.is_none();
    let mut spectral = None;
    if passed {
        let d = nystrom_decompose(&kernel, window, n_nodes)?;
        let void_probability = d.fredholm_det().unwrap_or(0.0);
        spectral = Some(SpectralSummary {
            n_nodes,
            trace: d.trace(),
            max_eigenvalue: d.max_eigenvalue(),
            count_variance: d.count_variance(),
            void_probability,
        });
        ctx.write_json("spectral.json", &d.dump())?;
        passed = d.max_eigenvalue() <= 1.0;
    }
    let report = Report {
        kernel: spec,
        checks,
        holder,
        holder_error,
        spectral,
        passed,
    };
    ctx.write_json("validation.json", &report)?;
    Ok(report)
}
