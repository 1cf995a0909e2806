use std::path::PathBuf;
use std::process::ExitCode;

use chiral_lab::{run, ExperimentConfig, LabError, Threads};
use clap::Parser;

/// Run one experiment from a TOML config.
#[derive(Parser)]
#[command(name = "lab", version)]
struct Cli {
    /// lyapunov, sector-zero, fm-decay, apriori, combes-thomas, zero-energy-check,
    /// chart-check, bloch, fermi, convergence or sqrt-w-sweep
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides model.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads or "auto"; falls back to LAB_THREADS, then the config file.
    #[arg(long)]
    threads: Option<String>,
    /// Output directory; defaults to the config's output_dir, then out/<experiment>.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main_inner(cli: Cli) -> Result<(), LabError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| LabError::config(format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = ExperimentConfig::parse(&text, Some(&cli.experiment), cli.seed)?;
    let threads = match cli.threads.or_else(|| std::env::var("LAB_THREADS").ok()) {
        Some(t) => t.parse::<Threads>()?,
        None => cfg.threads,
    };
    let out = cli.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    let result = run(&cfg, &out, threads.resolve())?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} {} wrote {} files to {} in {:.2} s",
        cfg.experiment,
        &result.config_hash[..12],
        result.files.len(),
        out.display(),
        result.wall_time.as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
