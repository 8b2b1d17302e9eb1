//! `ovnet`: seeded experiment runs driven by JSON config files.
//!
//! Exit codes: 0 on success, 2 for invalid configs or inputs, 3 when the run
//! itself fails.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;

#[derive(Parser)]
#[command(
    name = "ovnet",
    version,
    about = "Synthesize, plan, train and score orientation-vector networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nested-hypercube train/test CSVs plus cluster summaries.
    Generate(RunArgs),
    /// Canonical planes of a nested-hypercube family.
    Planes(RunArgs),
    /// Incrementally build a separating plane set for a cluster file.
    Plan(RunArgs),
    /// Build the three-layer network from planes and clusters.
    Synthesize(RunArgs),
    /// Train a network by backpropagation.
    Train(RunArgs),
    /// Accuracy of a saved model on datasets.
    Eval(RunArgs),
    /// KCR/PEW scores for trained and synthesized architectures.
    Score(RunArgs),
    /// Plane versus distance operation counts.
    Compare(RunArgs),
    /// Check that planes give every cluster a distinct code without cuts.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config whose "command" matches the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (&'static str, RunArgs) {
        match self {
            Command::Generate(a) => ("generate", a),
            Command::Planes(a) => ("planes", a),
            Command::Plan(a) => ("plan", a),
            Command::Synthesize(a) => ("synthesize", a),
            Command::Train(a) => ("train", a),
            Command::Eval(a) => ("eval", a),
            Command::Score(a) => ("score", a),
            Command::Compare(a) => ("compare", a),
            Command::Verify(a) => ("verify", a),
        }
    }
}

fn main() -> ExitCode {
    let (name, args) = Cli::parse().command.split();
    debug_assert!(commands::COMMANDS.contains(&name));
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
    };
    match commands::run(name, &args.config, overrides) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ovnet {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
