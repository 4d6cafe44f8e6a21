use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use semistab::cli::{parse_config_for, run, Command};

/// Linearized stability experiments: Kuramoto-Sivashinsky, the Zwart l2
/// counterexample and a quasilinear testbed.
#[derive(Parser, Debug)]
#[command(name = "semistab", version)]
struct Args {
    /// One of: simulate-ks, ks-eigs, zwart-orbit, zwart-truncation,
    /// frechet-scan, quasilinear-bound, classify.
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_path` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized commands (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut config = match parse_config_for(args.command, &text) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(out) = args.out {
        config.output_path = out;
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    match run(&config) {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("{}", file.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
