use clap::Parser;
use mbo_cli::{parse_config, run_experiment, ExperimentKind, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Multiphase thresholding experiments on the flat torus.
#[derive(Debug, Parser)]
#[command(name = "mbo", version)]
struct Args {
    /// evolve | circle-test | junction-test | consistency | oracle-check | excess-scan
    experiment: ExperimentKind,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Accept time steps with √h/dx < 3.
    #[arg(long)]
    allow_underresolved: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mbo: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: &Args) -> Result<bool, HarnessError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text, Some(args.experiment), args.allow_underresolved)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let summary = run_experiment(&cfg, &args.out)?;
    print!("{summary}");
    Ok(summary.all_passed())
}
