use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polconv::config::ExperimentConfig;
use polconv::pipeline::{exit_code, run, Command};

#[derive(Parser)]
#[command(name = "polconv", version, about = "Simulate and analyze polarization-coherent frequency conversion")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; also where count files are read from.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the configured number of Monte-Carlo resamples.
    #[arg(long = "mc-samples", global = true, value_name = "N")]
    mc_samples: Option<usize>,
    /// Count file to analyze instead of the default one in the output directory.
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Write simulated count files for all measurements.
    Simulate,
    /// Reconstruct two-photon states from tomography counts.
    ReconstructState,
    /// Reconstruct the single-photon conversion process.
    ReconstructProcess,
    /// Evaluate the CHSH parameter.
    Chsh,
    /// Conversion efficiency budget.
    Efficiency,
    /// Run all analyses and compare with the published values.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let mut cfg = match ExperimentConfig::load(config_path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.mc_samples {
        cfg.tomography.mc_samples = n;
    }
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::ReconstructState => Command::ReconstructState,
        Cmd::ReconstructProcess => Command::ReconstructProcess,
        Cmd::Chsh => Command::Chsh,
        Cmd::Efficiency => Command::Efficiency,
        Cmd::Report => Command::Report,
    };
    match run(&cfg, command, &cli.out, cli.input.as_deref()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
