use std::io::Write;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{Flags, Settings};

#[derive(Parser, Debug)]
#[command(
    name = "qcell",
    version,
    about = "Quantum-walk battery cell experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Eigenvalues with degeneracy groups.
    Spectrum,
    /// Bandwidth and localized ergotropy over a size range.
    Scaling,
    /// Inverse-thermal ergotropy: generic vs closed form.
    Thermal,
    /// Work per discharge strategy under noise.
    NoiseTrajectory,
    /// Bandwidth against the chiral phase.
    ChiralSweep,
    /// Random-unitary work probes against the ergotropy bound.
    Probe,
}

fn run(cli: &Cli) -> Result<()> {
    let settings = Settings::resolve(&cli.flags)?;
    let report = match cli.command {
        Command::Spectrum => commands::spectrum(&settings),
        Command::Scaling => commands::scaling(&settings),
        Command::Thermal => commands::thermal(&settings),
        Command::NoiseTrajectory => commands::noise_trajectory(&settings),
        Command::ChiralSweep => commands::chiral_sweep(&settings),
        Command::Probe => commands::probe(&settings),
    }?;
    let text = report.render(&settings);
    match &settings.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
