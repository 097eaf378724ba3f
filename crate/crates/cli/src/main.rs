mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "nael",
    version,
    about = "Arid Valley water allocation with ethical active inference"
)]
pub struct Cli {
    /// Scenario file.
    #[arg(long, global = true, default_value = "scenarios/arid_valley.toml")]
    pub config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only errors on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the daily perceive, filter, select cycle.
    Run(RunArgs),
    /// Score every candidate for one state and show the breakdown.
    Decide(DecideArgs),
    /// Tune the ethical parameters by finite-difference descent.
    Train(TrainArgs),
    /// Check a scenario and its norms.
    Validate,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub days: Option<u32>,
    /// JSONL trace output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// CSV summary output.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Episodes with seeds seed, seed+1, ...; outputs get a `.seed<N>` suffix.
    #[arg(long, default_value_t = 1)]
    pub episodes: usize,
    /// Worker threads for parallel episodes (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Comma-separated candidate labels to restrict to.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Parameter file written by `train`.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Args)]
pub struct DecideArgs {
    /// State file (day, deficits, species); defaults to the initial state.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// List fired norms, exclusions and neglected obligations.
    #[arg(long)]
    pub explain: bool,
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Episodes per objective evaluation.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Days per episode.
    #[arg(long)]
    pub days: Option<u32>,
    /// Final parameters (TOML).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// History CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// JSONL training-epoch events.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Starting parameters (TOML); defaults to the scenario's.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
