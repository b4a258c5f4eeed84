//! Collision probes for Dyson's model and for distorted Brownian motion in a
//! fixed-`n` sector, with optional `delta` sweeps and gap-dimension fits.
//!
//! Artifacts: `probe.json`, `hitting.csv` (columns `label, alpha, delta,
//! n_paths, n_hit, n_failures, hit_fraction, ci_low, ci_high`),
//! `gap_fit.json` when requested and `trajectory.csv` for one recorded path.

use std::sync::Arc;

use dyson_core::dynamics::{
    gap_dimension_fit, sample_sector, squeeze_pair, DriftSpec, GapDimensionFit, IntegratorOptions, ProbeModel,
    ProbeSummary,
};
use dyson_core::sampler::{confinement, sample_log_gas_with};
use dyson_core::{collision_probe, integrate_sde, KernelSpec, RngStream};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::require;
use crate::{CliError, Context, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Dyson,
    Distorted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapFitParams {
    /// Initial gap of the squeezed pair.
    pub g0: f64,
    pub times: Vec<f64>,
    pub n_paths: u64,
}

impl Default for GapFitParams {
    fn default() -> Self {
        Self {
            g0: 0.01,
            times: (1..=10).map(|k| 2e-6 * k as f64).collect(),
            n_paths: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub model: Model,
    /// Particles (Dyson) or sector size (distorted).
    pub n: usize,
    /// Bulk density fixing the Dyson confinement.
    pub density: f64,
    /// Product-kernel exponents for distorted runs; the config kernel otherwise.
    pub alphas: Option<Vec<f64>>,
    pub t_end: f64,
    pub delta: f64,
    pub n_paths: u64,
    /// Extra `delta` values probed with the same paths.
    pub delta_sweep: Vec<f64>,
    pub gap_fit: Option<GapFitParams>,
    pub trajectory: bool,
    pub dt_max: f64,
    pub c_dt: f64,
}

impl Default for Params {
    fn default() -> Self {
        let o = IntegratorOptions::default();
        Self {
            model: Model::Dyson,
            n: 8,
            density: 1.0,
            alphas: None,
            t_end: 1.0,
            delta: 1e-3,
            n_paths: 1000,
            delta_sweep: Vec::new(),
            gap_fit: None,
            trajectory: false,
            dt_max: o.dt_max,
            c_dt: o.c_dt,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub summary: ProbeSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapFitRow {
    pub label: String,
    pub fit: GapDimensionFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub probes: Vec<ProbeRow>,
    pub sweep: Vec<ProbeRow>,
    pub gap_fits: Vec<GapFitRow>,
    pub inconclusive: bool,
}

impl Report {
    pub fn status(&self) -> Status {
        if self.inconclusive {
            Status::Inconclusive("more than 5% of paths failed to integrate".into())
        } else {
            Status::Passed
        }
    }

    /// Main-`delta` probe with the given label.
    pub fn probe(&self, label: &str) -> Option<&ProbeSummary> {
        self.probes.iter().find(|p| p.label == label).map(|p| &p.summary)
    }
}

struct Setup {
    label: String,
    alpha: Option<f64>,
    model: ProbeModel,
    params: serde_json::Value,
}

fn setups(ctx: &Context, p: &Params) -> Result<Vec<Setup>, CliError> {
    match p.model {
        Model::Dyson => {
            let lambda = confinement(p.n, p.density);
            Ok(vec![Setup {
                label: format!("dyson-N{}", p.n),
                alpha: None,
                model: ProbeModel::Dyson { n: p.n, lambda },
                params: json!({"model": "dyson", "N": p.n, "lambda": lambda, "T": p.t_end, "delta": p.delta}),
            }])
        }
        Model::Distorted => {
            let window = ctx.config.window_or(-1.0, 1.0)?;
            let specs: Vec<(Option<f64>, KernelSpec)> = match &p.alphas {
                Some(a) => a.iter().map(|&x| (Some(x), KernelSpec::product(x))).collect(),
                None => {
                    let spec = ctx.config.kernel_or(KernelSpec::product(0.5));
                    vec![(spec.params.get("alpha").copied(), spec)]
                }
            };
            specs
                .into_iter()
                .map(|(alpha, spec)| {
                    let kernel = spec.build()?;
                    let decomp = super::decompose(ctx, &kernel, window)?;
                    let label = match alpha {
                        Some(a) => format!("distorted-alpha{a}"),
                        None => format!("distorted-{}", spec.family),
                    };
                    Ok(Setup {
                        label,
                        alpha,
                        model: ProbeModel::Distorted { decomp, n: p.n },
                        params: json!({"model": "distorted", "kernel": spec, "window": [window.lo, window.hi],
                                       "n": p.n, "T": p.t_end, "delta": p.delta}),
                    })
                })
                .collect()
        }
    }
}

fn initial(model: &ProbeModel, stream: RngStream) -> Result<dyson_core::Configuration, CliError> {
    Ok(match model {
        ProbeModel::Dyson { n, lambda } => sample_log_gas_with(*n, *lambda, stream)?,
        ProbeModel::Distorted { decomp, n } => sample_sector(decomp, *n, stream)?,
    })
}

fn drift(model: &ProbeModel) -> Result<DriftSpec, CliError> {
    Ok(match model {
        ProbeModel::Dyson { lambda, .. } => DriftSpec::Dyson { lambda: *lambda },
        ProbeModel::Distorted { decomp, .. } => DriftSpec::distorted(Arc::clone(decomp))?,
    })
}

pub fn run(ctx: &mut Context, p: &Params) -> Result<Report, CliError> {
    require(p.n >= 2, || "collision probes need at least two particles".into())?;
    require(p.t_end > 0.0 && p.delta > 0.0 && p.n_paths > 0, || "T, delta and n_paths must be positive".into())?;
    require(p.delta_sweep.iter().all(|&d| d > 0.0), || "delta_sweep entries must be positive".into())?;
    require(p.dt_max > 0.0 && p.c_dt > 0.0, || "dt_max and c_dt must be positive".into())?;
    if let Some(a) = &p.alphas {
        require(p.model == Model::Distorted, || "alphas apply to the distorted model".into())?;
        require(a.iter().all(|&x| x > 0.0 && x <= 1.0), || "alphas must lie in (0, 1]".into())?;
    }
    if let Some(g) = &p.gap_fit {
        require(g.g0 > 0.0 && g.n_paths > 1, || "gap fit needs g0 > 0 and n_paths > 1".into())?;
        require(!g.times.is_empty() && g.times.windows(2).all(|w| w[0] < w[1]) && g.times[0] > 0.0, || {
            "gap fit times must be positive and increasing".into()
        })?;
    }
    let opts = IntegratorOptions {
        dt_max: p.dt_max,
        c_dt: p.c_dt,
        ..IntegratorOptions::default()
    };
    let setups = setups(ctx, p)?;
    let mut probes = Vec::new();
    let mut sweep = Vec::new();
    let mut gap_fits = Vec::new();
    for (m, s) in setups.iter().enumerate() {
        let stream = ctx.stream(100 + m as u64);
        let stats = collision_probe(&s.model, p.n_paths, p.t_end, p.delta, stream, &opts)?;
        probes.push(ProbeRow {
            label: s.label.clone(),
            alpha: s.alpha,
            summary: ProbeSummary::new(stats, s.params.clone()),
        });
        for &delta in &p.delta_sweep {
            let stats = collision_probe(&s.model, p.n_paths, p.t_end, delta, stream, &opts)?;
            let mut params = s.params.clone();
            params["delta"] = json!(delta);
            sweep.push(ProbeRow {
                label: s.label.clone(),
                alpha: s.alpha,
                summary: ProbeSummary::new(stats, params),
            });
        }
        if let Some(g) = &p.gap_fit {
            let base = initial(&s.model, ctx.stream(300 + m as u64))?;
            let pair = match s.model {
                ProbeModel::Dyson { n, .. } => n / 2 - 1,
                ProbeModel::Distorted { .. } => 0,
            };
            let start = squeeze_pair(&base, pair, g.g0)?;
            let fit = gap_dimension_fit(&start, pair, &drift(&s.model)?, &g.times, g.n_paths, ctx.stream(400 + m as u64))?;
            gap_fits.push(GapFitRow {
                label: s.label.clone(),
                fit,
            });
        }
    }
    if p.trajectory {
        if let Some(s) = setups.first() {
            let rec = IntegratorOptions {
                record_every: Some(10),
                stop_at_hit: false,
                ..opts.clone()
            };
            let init = initial(&s.model, ctx.stream(9).substream(0))?;
            let tr = integrate_sde(&init, &drift(&s.model)?, p.t_end, p.delta, ctx.stream(9).substream(1), &rec)?;
            tr.write_csv(ctx.create("trajectory.csv")?)?;
        }
    }

    let summaries: Vec<&ProbeSummary> = probes.iter().chain(&sweep).map(|r| &r.summary).collect();
    ctx.write_json("probe.json", &summaries)?;
    let mut w = csv::Writer::from_writer(ctx.create("hitting.csv")?);
    w.write_record([
        "label",
        "alpha",
        "delta",
        "n_paths",
        "n_hit",
        "n_failures",
        "hit_fraction",
        "ci_low",
        "ci_high",
    ])?;
    for r in probes.iter().chain(&sweep) {
        let st = &r.summary.stats;
        w.write_record([
            r.label.clone(),
            r.alpha.map_or(String::new(), |a| a.to_string()),
            st.delta.to_string(),
            st.n_paths.to_string(),
            st.n_hit.to_string(),
            st.n_failures.to_string(),
            st.hit_fraction().to_string(),
            st.ci_low.to_string(),
            st.ci_high.to_string(),
        ])?;
    }
    w.flush()?;
    if !gap_fits.is_empty() {
        ctx.write_json("gap_fit.json", &gap_fits)?;
    }
    let inconclusive = summaries.iter().any(|s| s.inconclusive);
    Ok(Report {
        probes,
        sweep,
        gap_fits,
        inconclusive,
    })
}
