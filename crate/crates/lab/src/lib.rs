//! Experiment harness for the chiral strip core: configs, dispatch and artifacts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub use config::{Experiment, ExperimentConfig, ModelSection, Params, Threads};
pub use error::LabError;

use output::{write_all, Artifact};

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config_hash: String,
    pub echo: serde_json::Value,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Reported on the console only so that artifacts stay byte-identical.
    pub wall_time: Duration,
}

/// Runs `cfg` on a pool of `threads` workers and writes its artifacts into `out_dir`.
/// Nothing is written unless the whole computation succeeds.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<RunResult, LabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| LabError::config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let hash = cfg.content_hash();
    let outcome = pool.install(|| experiments::execute(cfg, &hash))?;
    let echo = cfg.echo();
    let summary_file = serde_json::json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "config": echo,
        "summary": outcome.summary,
        "warnings": outcome.warnings,
    });
    let mut artifacts = outcome.artifacts;
    artifacts.push(Artifact::json("summary.json", &summary_file));
    write_all(out_dir, &artifacts)?;
    Ok(RunResult {
        config_hash: hash,
        echo,
        summary: outcome.summary,
        warnings: outcome.warnings,
        files: artifacts.iter().map(|a| out_dir.join(&a.name)).collect(),
        wall_time: start.elapsed(),
    })
}
