//! Command-line driver: graph sampling, tail experiments, modulus solves and
//! the random-graph probe. Every run writes its primary outputs and a
//! `manifest.json` with their SHA-256 digests into `--out-dir`.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Settings;
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "wormmod", version, about)]
struct Cli {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample graphs; write each sample as JSON and its deepest generation as SVG.
    Gen,
    /// Density tail experiment over an isometry net.
    Density,
    /// Intersection-length tail experiment.
    Intersect,
    /// Solve a modulus instance file.
    Modulus,
    /// Modulus of a family of sampled graphs, at N and 2N.
    Probe,
    /// Hoeffding bounds next to empirical tails of uniform means.
    Hoeffding,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let settings = cli.settings.over(file);
    if let Some(n) = settings.threads {
        if n == 0 {
            return Err(Failure::validation("invalid parameter `threads`: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen => commands::gen(settings),
        Command::Density => commands::density(settings),
        Command::Intersect => commands::intersect(settings),
        Command::Modulus => commands::modulus(settings),
        Command::Probe => commands::probe(settings),
        Command::Hoeffding => commands::hoeffding(settings),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
