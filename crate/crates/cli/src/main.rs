use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Evolutionary public goods game with AI agents in player neighborhoods.
#[derive(Debug, Parser)]
#[command(name = "pgg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one evolutionary simulation and write its time series.
    Simulate(SimulateArgs),
    /// Run a replicate battery over r and rho_A and extract critical points.
    Sweep(SweepArgs),
    /// Print the dilemma bounds and the predicted critical synergy per rho_A.
    Predict(PredictArgs),
    /// Re-extract critical points from a sweep CSV and compare with the prediction.
    Critical(CriticalArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
struct Common {
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value configuration file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed (the master seed for sweeps).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    parallelism: Option<usize>,
}

/// Flags that mirror run-parameter config keys.
#[derive(Debug, Args)]
struct ModelFlags {
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    generations: Option<String>,
    #[arg(long)]
    grid_width: Option<String>,
    #[arg(long)]
    grid_height: Option<String>,
    #[arg(long)]
    population_size: Option<String>,
    #[arg(long)]
    games_per_focal: Option<String>,
    #[arg(long)]
    fitness_shift: Option<String>,
    #[arg(long)]
    mimic_mode: Option<String>,
    #[arg(long)]
    init: Option<String>,
}

impl ModelFlags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("policy", &self.policy),
            ("k", &self.k),
            ("mu", &self.mu),
            ("generations", &self.generations),
            ("grid_width", &self.grid_width),
            ("grid_height", &self.grid_height),
            ("population_size", &self.population_size),
            ("games_per_focal", &self.games_per_focal),
            ("fitness_shift", &self.fitness_shift),
            ("mimic_mode", &self.mimic_mode),
            ("init", &self.init),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelFlags,
    /// Synergy factor.
    #[arg(long)]
    r: Option<String>,
    /// Agent density rho_A.
    #[arg(long)]
    rho: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelFlags,
    /// Comma-separated synergy values.
    #[arg(long)]
    r_values: Option<String>,
    /// Comma-separated agent densities.
    #[arg(long)]
    rho_values: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    tail_fraction: Option<String>,
    /// Directory for per-run time-series CSVs.
    #[arg(long)]
    run_csv_dir: Option<String>,
    /// Also write the result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Suppress progress on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Comma-separated agent densities.
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    rho: String,
}

#[derive(Debug, Args)]
struct CriticalArgs {
    #[command(flatten)]
    common: Common,
    /// Sweep CSV to analyze.
    #[arg(long)]
    input: PathBuf,
    /// Cooperation level that defines the critical point.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Predict(args) => commands::predict(args),
        Command::Critical(args) => commands::critical(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_usage() { 2 } else { 1 })
        }
    }
}
