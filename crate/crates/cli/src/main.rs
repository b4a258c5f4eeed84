use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dyson_lab::{run, Experiment, ExperimentConfig, Overrides, THREADS_ENV};

/// Seeded experiments on determinantal point fields and their dynamics.
#[derive(Debug, Parser)]
#[command(name = "dyson-lab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = ExperimentConfig::load(&cli.config).and_then(|config| {
        let overrides = Overrides {
            seed: cli.seed,
            out: cli.out.clone(),
            threads_env: std::env::var(THREADS_ENV).ok(),
        };
        run(cli.experiment, config, &overrides)
    });
    match result {
        Ok(outcome) => {
            match serde_json::to_string(&outcome.status) {
                Ok(s) => println!("{s}"),
                Err(e) => eprintln!("cannot encode status: {e}"),
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("dyson-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
