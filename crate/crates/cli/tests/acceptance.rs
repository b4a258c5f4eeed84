//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Set `ACCEPTANCE_ONLY=1,4,9` to run a subset.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use dyson_core::inference::{chi_square_counts, poisson_binomial_pmf};
use dyson_core::{nystrom_decompose, sample_dpp, Interval, KernelSpec, RngStream};
use dyson_lab::experiments::{capacity, convergence, correlations, density, dynamics};
use dyson_lab::{CliError, Context, Experiment, ExperimentConfig};
use rayon::prelude::*;
use tempfile::TempDir;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn(&Path) -> Result<Verdict, CliError>;

fn ctx(dir: &Path, name: &str, config: ExperimentConfig) -> Result<Context, CliError> {
    Context::new(config, SEED, dir.join(name))
}

fn criterion_1(dir: &Path) -> Result<Verdict, CliError> {
    let config = ExperimentConfig::new(Experiment::Correlations)
        .with_kernel(KernelSpec::sine(1.0))
        .with_window(-3.0, 3.0);
    let p = correlations::Params {
        n_samples: 10_000,
        pair_distances: vec![0.5],
        ..Default::default()
    };
    let r = correlations::run(&mut ctx(dir, "c1", config)?, &p)?;
    let z1 = r
        .rho1
        .values
        .iter()
        .zip(&r.rho1.std_errors)
        .map(|(v, se)| ((v - 1.0) / se).abs())
        .fold(0.0, f64::max);
    let exact = 1.0 - (2.0 / PI).powi(2);
    let e2 = &r.rho2[0];
    let z2 = ((e2.value - exact) / e2.std_error).abs();
    Ok(Verdict {
        pass: z1 <= 3.0 && z2 <= 3.0,
        detail: format!(
            "rho1 max|z| = {z1:.2} over {} bins; rho2(0.5) = {:.4} +- {:.4} vs {exact:.4} (|z| = {z2:.2})",
            r.rho1.values.len(),
            e2.value,
            e2.std_error
        ),
    })
}

fn criterion_2(_: &Path) -> Result<Verdict, CliError> {
    let n_samples = 10_000u64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("sine", KernelSpec::sine(1.0)), ("product(0.5)", KernelSpec::product(0.5))] {
        let k = spec.build()?;
        let d = nystrom_decompose(&k, Interval::new(-3.0, 3.0), 128)?;
        let stream = RngStream::new(SEED, 2);
        let counts: Vec<usize> = (0..n_samples)
            .into_par_iter()
            .map(|i| sample_dpp(&d, stream.substream(i)).map(|c| c.len()))
            .collect::<Result<_, _>>()?;
        let pmf = poisson_binomial_pmf(&d.eigenvalues);
        let mut observed = vec![0u64; pmf.len()];
        for c in counts {
            observed[c.min(pmf.len() - 1)] += 1;
        }
        let t = chi_square_counts(&observed, &pmf)?;
        pass &= t.passes(0.01);
        parts.push(format!("{name}: chi2 = {:.2}, p = {:.3}", t.statistic, t.p_value));
    }
    Ok(Verdict {
        pass,
        detail: parts.join("; "),
    })
}

fn density_run(dir: &Path, alpha: f64) -> Result<density::Report, CliError> {
    let config = ExperimentConfig::new(Experiment::DensityCrosscheck)
        .with_kernel(KernelSpec::product(alpha))
        .with_window(-1.0, 1.0);
    density::run(&mut ctx(dir, &format!("density-{alpha}"), config)?, &density::Params::default())
}

fn criterion_3(dir: &Path) -> Result<Verdict, CliError> {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0] {
        let r = density_run(dir, alpha)?;
        let v = r.void.as_ref().expect("void check enabled");
        pass &= r.all_agree && v.passed;
        parts.push(format!(
            "alpha {alpha}: {}/{} tuples agree (worst |diff|/tol = {:.2}), void {:.4} vs {:.4} (|z| = {:.2})",
            r.rows.iter().filter(|x| x.agrees()).count(),
            r.rows.len(),
            r.worst_ratio,
            v.empty_fraction,
            v.sigma0,
            v.z.abs()
        ));
    }
    Ok(Verdict {
        pass,
        detail: parts.join("; "),
    })
}

fn criterion_4(_: &Path) -> Result<Verdict, CliError> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (alpha, lo, hi) in [(0.5, 0.35, 0.65), (1.0, 0.85, 1.3)] {
        let k = KernelSpec::product(alpha).build()?;
        let d = nystrom_decompose(&k, Interval::new(-1.0, 1.0), 128)?;
        let fit = dyson_core::statistics::gap_exponent(&d, 0.0)?;
        let ok = (lo..=hi).contains(&fit.slope);
        pass &= ok;
        parts.push(format!("alpha {alpha}: slope {:.3} in [{lo}, {hi}]", fit.slope));
    }
    Ok(Verdict {
        pass,
        detail: parts.join("; "),
    })
}

fn criterion_5(dir: &Path) -> Result<Verdict, CliError> {
    let p = dynamics::Params {
        n: 8,
        gap_fit: Some(dynamics::GapFitParams::default()),
        ..Default::default()
    };
    let r = dynamics::run(&mut ctx(dir, "c5", ExperimentConfig::new(Experiment::Dynamics))?, &p)?;
    let s = r.probe("dyson-N8").expect("dyson probe");
    let fit = &r.gap_fits[0].fit;
    let hit_ok = s.ci.1 < 0.01 && !s.inconclusive;
    let dim_ok = (fit.dimension - 3.0).abs() <= 0.2;
    Ok(Verdict {
        pass: hit_ok && dim_ok,
        detail: format!(
            "hits {}/{} (CI [{:.4}, {:.4}], need upper < 0.01: {}); gap dimension {:.3} +- {:.3} (need 3 +- 0.2: {})",
            s.stats.n_hit,
            s.stats.n_paths,
            s.ci.0,
            s.ci.1,
            ok(hit_ok),
            fit.dimension,
            fit.dimension_se,
            ok(dim_ok)
        ),
    })
}

fn criterion_6(dir: &Path) -> Result<Verdict, CliError> {
    let p = dynamics::Params {
        model: dynamics::Model::Distorted,
        n: 2,
        alphas: Some(vec![0.5, 1.0]),
        ..Default::default()
    };
    let config = ExperimentConfig::new(Experiment::Dynamics).with_window(-1.0, 1.0);
    let r = dynamics::run(&mut ctx(dir, "c6", config)?, &p)?;
    let a = r.probe("distorted-alpha0.5").expect("alpha 0.5 probe");
    let b = r.probe("distorted-alpha1").expect("alpha 1 probe");
    Ok(Verdict {
        pass: a.ci.0 > 0.3 && a.ci.0 > b.ci.1 && !a.inconclusive && !b.inconclusive,
        detail: format!(
            "alpha 0.5: {}/{} hits, CI [{:.3}, {:.3}]; alpha 1: {}/{} hits, CI [{:.3}, {:.3}]",
            a.stats.n_hit, a.stats.n_paths, a.ci.0, a.ci.1, b.stats.n_hit, b.stats.n_paths, b.ci.0, b.ci.1
        ),
    })
}

fn criterion_7(dir: &Path) -> Result<Verdict, CliError> {
    let config = ExperimentConfig::new(Experiment::Capacity)
        .with_kernel(KernelSpec::sine(1.0))
        .with_window(-3.0, 3.0);
    let sine = capacity::run(&mut ctx(dir, "c7-sine", config)?, &capacity::Params::default())?;
    let fit = sine.fit.as_ref().expect("decay fit");
    let fit_ok = fit.residual < 0.2 && fit.monotone;
    let p = capacity::Params {
        sampler: capacity::Sampler::Poisson,
        eps: vec![0.1, 0.05, 0.025],
        ..Default::default()
    };
    let poisson = capacity::run(&mut ctx(dir, "c7-poisson", ExperimentConfig::new(Experiment::Capacity))?, &p)?;
    let ratios: Vec<String> = poisson.oracle.iter().map(|o| format!("{:.3}", o.ratio)).collect();
    let poisson_ok = poisson.decreasing && poisson.oracle_ok == Some(true);
    Ok(Verdict {
        pass: fit_ok && poisson_ok,
        detail: format!(
            "sine: C = {:.3}, residual {:.3} (need < 0.2: {}), monotone {}; poisson d=3: decreasing {}, energy/oracle = [{}] ({})",
            fit.c,
            fit.residual,
            ok(fit.residual < 0.2),
            fit.monotone,
            poisson.decreasing,
            ratios.join(", "),
            ok(poisson_ok)
        ),
    })
}

fn criterion_8(dir: &Path) -> Result<Verdict, CliError> {
    let r = convergence::run(
        &mut ctx(dir, "c8", ExperimentConfig::new(Experiment::Convergence))?,
        &convergence::Params::default(),
    )?;
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|x| format!("N={}: {:.4} +- {:.4} (exact {:.4})", x.n, x.rho1, x.std_error, x.rho_exact))
        .collect();
    let p_min = r.certificate.tests.iter().map(|t| t.p_value).fold(1.0, f64::min);
    Ok(Verdict {
        pass: r.trend_ok && r.certificate.passed,
        detail: format!(
            "{}; trend {}; N=2 Metropolis KS min p = {p_min:.3}",
            rows.join(", "),
            ok(r.trend_ok)
        ),
    })
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output directory")
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

fn criterion_9(dir: &Path) -> Result<Verdict, CliError> {
    let configs = [
        ("correlations", r#"{"kernel": {"family": "sine", "params": {"density": 1.0}}, "window": [-3, 3],
            "params": {"n_samples": 400, "pair_distances": [0.5]}}"#),
        ("density-crosscheck", r#"{"kernel": {"family": "product", "params": {"alpha": 0.5}}, "window": [-1, 1], "n_nodes": 48,
            "params": {"n_tuples": 4, "k_max": 5, "void_samples": 300, "bound_tuples": 6, "qmc_points": 6400}}"#),
        ("dynamics", r#"{"params": {"model": "dyson", "n": 4, "n_paths": 40, "t_end": 0.2, "delta_sweep": [0.01]}}"#),
        ("dynamics", r#"{"window": [-1, 1], "n_nodes": 48,
            "params": {"model": "distorted", "n": 2, "alphas": [0.5], "n_paths": 20, "t_end": 0.1}}"#),
        ("capacity", r#"{"params": {"n_samples": 200}}"#),
        ("capacity", r#"{"params": {"sampler": "poisson", "n_samples": 100, "eps": [0.1, 0.05], "intensity": 50}}"#),
        ("convergence", r#"{"params": {"ns": [4, 8], "n_samples": 500, "certify_draws": 300}}"#),
        ("sample", r#"{"params": {"sampler": "log_gas", "n": 6, "n_samples": 50}}"#),
    ];
    let bin = env!("CARGO_BIN_EXE_dyson-lab");
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (k, (experiment, text)) in configs.iter().enumerate() {
        let cfg = dir.join(format!("c9-{k}.json"));
        std::fs::write(&cfg, text)?;
        let mut runs = Vec::new();
        for (run, threads) in [(0, "1"), (1, "1"), (2, "8")] {
            let out = dir.join(format!("c9-{k}-{run}"));
            let status = Command::new(bin)
                .args([experiment, "--config"])
                .arg(&cfg)
                .args(["--seed", "99", "--out"])
                .arg(&out)
                .env("DYSON_LAB_THREADS", threads)
                .stdout(Stdio::null())
                .status()?;
            if !matches!(status.code(), Some(0 | 3 | 4)) {
                return Err(CliError::Config(format!("{experiment} exited with {status}")));
            }
            runs.push(artifacts(&out));
        }
        if runs[0].is_empty() {
            mismatches.push(format!("{experiment}#{k}: no artifacts"));
        }
        for other in &runs[1..] {
            compared += 1;
            if *other != runs[0] {
                mismatches.push(format!("{experiment}#{k}"));
            }
        }
    }
    Ok(Verdict {
        pass: mismatches.is_empty(),
        detail: format!(
            "{compared} artifact-set comparisons (rerun and 1 vs 8 workers) over {} configs; mismatches: [{}]",
            configs.len(),
            mismatches.join(", ")
        ),
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "NOT MET"
    }
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(usize, &str, u64, Check); 9] = [
        (1, "determinant correlations", 300, criterion_1),
        (2, "count law", 120, criterion_2),
        (3, "density oracle equivalence", 300, criterion_3),
        (4, "density exponent", 120, criterion_4),
        (5, "non-collision (Dyson)", 900, criterion_5),
        (6, "collision (distorted, alpha 0.5 vs 1)", 900, criterion_6),
        (7, "capacity decay", 600, criterion_7),
        (8, "finite-N convergence", 600, criterion_8),
        (9, "reproducibility", 600, criterion_9),
    ];
    let dir = TempDir::new().expect("temporary directory");
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t0 = Instant::now();
        let result = check(dir.path());
        let elapsed = t0.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (pass, detail) = match result {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} ({name}): {} | {detail} | {:.1}s of {limit}s",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
