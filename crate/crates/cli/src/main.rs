use std::process::ExitCode;

use clap::Parser;
use trigon_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) if outcome.failed_seeds == 0 => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("error: {} seed run(s) failed", outcome.failed_seeds);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
