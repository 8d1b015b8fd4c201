use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use qdx::{emit_plotdata, exit_code, run, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "qdx",
    version,
    about = "Wavepacket spreading experiments for the Fibonacci Hamiltonian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Derive two-column plot files from a run manifest.
    Plotdata { manifest: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run(&cfg)?;
            for f in &summary.files {
                println!("{}\t{}", f.schema, f.path);
            }
            println!("manifest\t{}", summary.manifest.display());
        }
        Command::Plotdata { manifest } => {
            for p in emit_plotdata(&manifest)? {
                println!("{}", p.display());
            }
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?.validate()?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
