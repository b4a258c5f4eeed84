//! Experiment runner behind the `dyson-lab` binary.
//!
//! [`run`] resolves the worker pool, output directory and seed, executes one
//! experiment inside a dedicated rayon pool and writes `manifest.json` next
//! to the numeric artifacts. Artifacts depend only on the config and seed;
//! the manifest additionally records timing and the pool size.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use dyson_core::RngStream;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, ExitCode};

/// Environment variable overriding the configured worker-pool size.
pub const THREADS_ENV: &str = "DYSON_LAB_THREADS";

/// Verdict of an experiment's built-in checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed(String),
    Inconclusive(String),
}

impl Status {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Passed => ExitCode::Success,
            Self::Failed(_) => ExitCode::Validation,
            Self::Inconclusive(_) => ExitCode::Inconclusive,
        }
    }

    /// `Failed(reason)` unless `ok`.
    pub fn check(ok: bool, reason: impl Into<String>) -> Self {
        if ok {
            Self::Passed
        } else {
            Self::Failed(reason.into())
        }
    }

    /// Keeps the first non-passing verdict.
    pub fn and(self, other: Status) -> Status {
        match self {
            Self::Passed => other,
            s => s,
        }
    }
}

/// Run state handed to an experiment: the config, the effective seed and the
/// artifact directory.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
    artifacts: Vec<String>,
}

impl Context {
    pub fn new(config: ExperimentConfig, seed: u64, out: impl Into<PathBuf>) -> Result<Self, CliError> {
        let out = out.into();
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            config,
            seed,
            out,
            artifacts: Vec::new(),
        })
    }

    /// Independent random stream `id` of this run.
    pub fn stream(&self, id: u64) -> RngStream {
        RngStream::new(self.seed, id)
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Creates artifact `name` in the output directory.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// Result of one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub status: Status,
    pub summary: Value,
    pub artifacts: Vec<String>,
}

/// Command-line overrides of a config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Raw value of [`THREADS_ENV`].
    pub threads_env: Option<String>,
}

/// Pool size: the environment variable, then the config, then the machine.
pub fn resolve_threads(env: Option<&str>, configured: Option<usize>) -> Result<usize, CliError> {
    if let Some(raw) = env.filter(|s| !s.trim().is_empty()) {
        return match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("{THREADS_ENV}={raw} is not a positive integer"))),
        };
    }
    match configured {
        Some(0) => Err(CliError::Config("threads must be positive".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    threads: usize,
    versions: Value,
    started_unix: u64,
    wall_time_s: f64,
    exit_code: i32,
    outcome: Value,
    artifacts: &'a [String],
}

/// Runs `experiment` and writes its artifacts and manifest. Errors raised
/// before the output directory exists leave no files behind.
pub fn run(experiment: Experiment, config: ExperimentConfig, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    if let Some(e) = config.experiment {
        if e != experiment {
            return Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                e.name(),
                experiment.name()
            )));
        }
    }
    let threads = resolve_threads(overrides.threads_env.as_deref(), config.threads)?;
    let seed = overrides.seed.unwrap_or(config.seed);
    let out = overrides
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("dyson-lab-out").join(experiment.name()));
    let mut echo = config.clone();
    echo.seed = seed;
    let mut ctx = Context::new(config, seed, &out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let result = pool.install(|| experiments::dispatch(experiment, &mut ctx));
    let wall_time_s = clock.elapsed().as_secs_f64();
    let (exit_code, outcome_json) = match &result {
        Ok(o) => (o.status.exit_code() as i32, json!({"status": o.status, "summary": o.summary})),
        Err(e) => (e.exit_code() as i32, json!({"error": e.to_string()})),
    };
    let manifest = Manifest {
        experiment: experiment.name(),
        seed,
        config: &echo,
        threads,
        versions: json!({"dyson-lab": env!("CARGO_PKG_VERSION"), "dyson-core": dyson_core::VERSION}),
        started_unix,
        wall_time_s,
        exit_code,
        outcome: outcome_json,
        artifacts: ctx.artifacts(),
    };
    write_manifest(&out, &manifest)?;
    result
}

fn write_manifest(out: &Path, manifest: &Manifest<'_>) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
