//! Experiment configuration files.
//!
//! A config is one JSON object. Shared fields sit at the top level and the
//! experiment's own settings go under `params`:
//!
//! ```json
//! {
//!   "experiment": "correlations",
//!   "kernel": {"family": "sine", "params": {"density": 1.0}},
//!   "window": [-3.0, 3.0],
//!   "seed": 7,
//!   "threads": 4,
//!   "params": {"n_samples": 10000, "pair_distances": [0.5]}
//! }
//! ```
//!
//! Unknown keys are rejected at both levels.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use dyson_core::{Interval, KernelSpec, Region};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Nodes of the Nyström rule unless the config says otherwise.
pub const DEFAULT_NODES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Validate,
    Sample,
    Correlations,
    DensityCrosscheck,
    Convergence,
    Dynamics,
    Capacity,
    Plot,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Sample => "sample",
            Self::Correlations => "correlations",
            Self::DensityCrosscheck => "density-crosscheck",
            Self::Convergence => "convergence",
            Self::Dynamics => "dynamics",
            Self::Capacity => "capacity",
            Self::Plot => "plot",
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Self as ValueEnum>::from_str(s, false).map_err(|_| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the command-line experiment when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Observation window `[lo, hi]` on the line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    /// Worker-pool size; `DYSON_LAB_THREADS` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment: Some(experiment),
            kernel: None,
            window: None,
            seed: 0,
            threads: None,
            n_nodes: None,
            output: None,
            params: empty_object(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    pub fn with_kernel(mut self, spec: KernelSpec) -> Self {
        self.kernel = Some(spec);
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some([lo, hi]);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_params<P: Serialize>(mut self, params: &P) -> Self {
        self.params = serde_json::to_value(params).expect("params serialize");
        self
    }

    pub fn kernel_or(&self, default: KernelSpec) -> KernelSpec {
        self.kernel.clone().unwrap_or(default)
    }

    pub fn window_or(&self, lo: f64, hi: f64) -> Result<Interval, CliError> {
        let [a, b] = self.window.unwrap_or([lo, hi]);
        Interval::checked(a, b).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn n_nodes(&self) -> Result<usize, CliError> {
        let n = self.n_nodes.unwrap_or(DEFAULT_NODES);
        if n < 8 {
            return Err(CliError::Config(format!("n_nodes = {n} is below 8")));
        }
        Ok(n)
    }

    /// Decodes `params` into the experiment's parameter type.
    pub fn params<P: DeserializeOwned>(&self) -> Result<P, CliError> {
        let v = if self.params.is_null() { empty_object() } else { self.params.clone() };
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("bad params: {e}")))
    }
}

/// Box given as `{"lo": [...], "hi": [...]}`; checked on use.
pub fn checked_region(r: &Region) -> Result<Region, CliError> {
    Region::new(r.lo.clone(), r.hi.clone()).map_err(|e| CliError::Config(e.to_string()))
}

/// Fails with a config error unless `ok`.
pub fn require(ok: bool, what: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(what()))
    }
}
