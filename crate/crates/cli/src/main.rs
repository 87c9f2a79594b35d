//! `pulseflow`: synthesise area fields, reconstruct flow, and derive the
//! sensitivity and hemodynamic profiles from a reconstruction.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub type Failure = anyhow::Error;

#[derive(Parser)]
#[command(
    name = "pulseflow",
    version,
    about = "Periodic flow reconstruction from vessel cross-sectional areas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
pub struct Common {
    /// JSON configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created when missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed recorded in the manifest; `synth` also uses it for the pulse shape.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic area grid with known elasticity and mean flow.
    Synth(Common),
    /// Estimate alpha and reconstruct the local flow curves.
    Reconstruct(Common),
    /// Sensitivity of the flow to alpha at the reported optimum.
    Sensitivity(Common),
    /// Reynolds and Womersley numbers along the segment.
    Hemo(Common),
}

/// 2 for outcomes where the data admit no reconstruction, 1 for everything else.
fn exit_code(err: &Failure) -> u8 {
    use pulseflow::Error as E;
    match err.downcast_ref::<E>() {
        Some(
            E::Infeasible { .. }
            | E::NoBracket { .. }
            | E::EmptyFeasibleInterval
            | E::ResonantMultiplier { .. }
            | E::NonUnique
            | E::DegenerateQuadratic
            | E::NoneAdmissible,
        ) => 2,
        _ => 1,
    }
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("PULSEFLOW_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => anyhow::bail!("PULSEFLOW_THREADS must be a positive integer, got {v:?}"),
        },
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = threads()?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let ctx = |c: Common, name: &'static str| commands::Context {
        command: name,
        threads,
        common: c,
    };
    match cli.command {
        Command::Synth(c) => commands::synth(&ctx(c, "synth")),
        Command::Reconstruct(c) => commands::reconstruct(&ctx(c, "reconstruct")),
        Command::Sensitivity(c) => commands::sensitivity(&ctx(c, "sensitivity")),
        Command::Hemo(c) => commands::hemo(&ctx(c, "hemo")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = match &cli.command {
        Command::Synth(c)
        | Command::Reconstruct(c)
        | Command::Sensitivity(c)
        | Command::Hemo(c) => c.verbose,
    };
    env_logger::Builder::new()
        .filter_level(if verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
