//! `redor` command-line pipeline: data generation, checkpoint pretraining,
//! subset selection, training with evaluation, comparison and probes.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "redor",
    version,
    about = "Gradient-matching dataset reduction for offline RL"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; they override values from `--config`.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed; repeat for several seeds.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Output directory (must exist).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Triple the random-trajectory count of generated data.
    #[arg(long)]
    pub hard: bool,
    /// Training gradient steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Hidden width of actor and critic.
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an offline dataset into `<out>/dataset.jsonl`.
    Generate(commands::GenerateArgs),
    /// Train on the full dataset and write round checkpoints into `<out>`.
    Pretrain(commands::PretrainArgs),
    /// Select a weighted subset into `<out>/<method>.selection.jsonl`.
    Select(commands::SelectArgs),
    /// Train on a selection and upsert evaluation rows into `<out>/metrics.csv`.
    TrainEval(commands::TrainEvalArgs),
    /// Run every configured method over every seed.
    Compare(commands::CompareArgs),
    /// Run numerical probes into `<out>/probes.jsonl`.
    Probe(commands::ProbeArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Pretrain(a) => commands::pretrain(a),
        Command::Select(a) => commands::select(a),
        Command::TrainEval(a) => commands::train_eval(a),
        Command::Compare(a) => commands::compare(a),
        Command::Probe(a) => commands::probe(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are successful requests
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
