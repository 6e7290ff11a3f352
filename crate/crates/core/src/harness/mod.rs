//! Reproducible experiment runs: configuration, the experiment registry,
//! output files and the command-line front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind, ExperimentParams, Overrides};
pub use experiments::RunContext;
pub use output::{ResultRow, Results, RunManifest, WrittenFiles};

use crate::error::{Error, Result};

/// Environment variable that fixes the worker-thread count.
pub const THREADS_ENV: &str = "MPOST_THREADS";

/// Sizes the global rayon pool from `MPOST_THREADS` when set. Call once, before
/// any parallel work; later calls and an already-initialized pool are ignored.
pub fn init_threads_from_env() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::config(THREADS_ENV, format!("expected a positive integer, got `{raw}`")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
        log::debug!("rayon pool already initialized; {THREADS_ENV} ignored");
    }
    Ok(())
}

/// A finished run: the manifest plus every row and kept ensemble.
#[derive(Debug)]
pub struct Run {
    pub manifest: RunManifest,
    pub results: Results,
}

/// Validates and runs `config`. `keep_members` retains raw ensemble members.
pub fn run_experiment(config: &ExperimentConfig, keep_members: bool) -> Result<Run> {
    config.validate()?;
    let start = Instant::now();
    let ctx = RunContext {
        seed: config.seed,
        mc_reps: config.mc_reps,
        keep_members,
    };
    log::info!("running {} (seed {})", config.experiment, config.seed);
    let results = experiments::run(&config.params, &ctx).map_err(|e| with_context(config.experiment, e))?;
    let manifest = RunManifest::new(config, &results, start.elapsed().as_secs_f64());
    Ok(Run { manifest, results })
}

/// Runs `config` and writes its files under `dir`.
pub fn run_to_dir(config: &ExperimentConfig, dir: &Path, keep_members: bool) -> Result<(Run, WrittenFiles)> {
    let run = run_experiment(config, keep_members)?;
    let files = output::write_outputs(dir, &run.manifest, &run.results)?;
    Ok((run, files))
}

fn with_context(kind: ExperimentKind, e: Error) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("{kind}: {msg}")),
        other => other,
    }
}
