use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dbsn_cli::commands;
use dbsn_cli::config::ExperimentConfig;
use dbsn_cli::error::{CliError, Result};

/// Physics-informed B-spline networks: training, evaluation, and
/// reference-solution tooling.
#[derive(Parser)]
#[command(name = "dbsn", version, about)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory from the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (reserved; computation is currently single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate oracle reference datasets for the configured parameters.
    OracleGen,
    /// Train a model and write a checkpoint plus loss history.
    Train,
    /// Evaluate the checkpoint in the output directory against the oracles.
    Eval,
    /// Audit the analytic training gradient with finite differences.
    Gradcheck {
        /// Maximum tolerated relative error.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Report the least-squares approximation floor of the basis.
    Fit,
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = ExperimentConfig::load(config_path)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    match cli.command {
        Command::OracleGen => commands::cmd_oracle_gen(&cfg, &out),
        Command::Train => commands::cmd_train(&cfg, seed, &out),
        Command::Eval => commands::cmd_eval(&cfg, seed, &out),
        Command::Gradcheck { tol } => commands::cmd_gradcheck(&cfg, seed, tol),
        Command::Fit => commands::cmd_fit(&cfg, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
