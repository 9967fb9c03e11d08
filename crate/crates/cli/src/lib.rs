//! Command-line driver: structural diagnostics, rewiring, training sweeps,
//! ablations and synthetic datasets. Every output file carries `# key=value`
//! provenance lines describing the run that produced it.

pub mod commands;
pub mod config;
pub mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub use commands::{Outcome, WORKERS_ENV};
pub use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "trigon",
    version,
    about = "Triangle-based graph rewiring and structural diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Curvature, resistance, spectral gap and diameter of the input graph
    /// and of any rewired edge lists.
    Diagnose(commands::DiagnoseArgs),
    /// Writes the graph produced by one rewiring method.
    Rewire(commands::RewireArgs),
    /// Trains a GCN per method, depth and seed.
    Train(commands::TrainArgs),
    /// Selection-strategy, view and loss ablations.
    Ablate(commands::AblateArgs),
    /// Writes a synthetic dataset directory.
    Synth(commands::SynthArgs),
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Rewire(a) => commands::rewire(a),
        Command::Train(a) => commands::train(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Synth(a) => commands::synth(a),
    }
}
