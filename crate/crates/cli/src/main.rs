//! `rmst-sl`: simulate censored data, compute pseudo-observations, fit and
//! evaluate pseudo-observation super learners, and audit the oracle bound.

mod commands;
mod config;
mod error;
mod io;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "rmst-sl", version, about = "Pseudo-observation super learner for restricted mean survival time")]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `seed` and `simulation.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory; beats RMST_SL_OUT, which beats `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a censored dataset (CSV plus JSON sidecar with latent truth).
    Simulate,
    /// Pseudo-observations of a dataset CSV.
    Pobs {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit a super learner and write the model JSON.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Predict restricted means for the covariates of a CSV.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Risk report: IPCW on a dataset, or latent risks on simulated data.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte Carlo audit of the oracle inequality.
    Audit,
    /// Time the core operations.
    Bench,
}

const OUT_ENV: &str = "RMST_SL_OUT";

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.simulation.seed = seed;
    }
    if let Some(dir) = std::env::var_os(OUT_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out {
        config.output_dir = dir.clone();
    }
    match &cli.command {
        Some(Command::Pobs { input } | Command::Fit { input }) => {
            if input.is_some() {
                config.input = input.clone();
            }
        }
        Some(Command::Predict { model, input } | Command::Evaluate { model, input }) => {
            if input.is_some() {
                config.input = input.clone();
            }
            if model.is_some() {
                config.model = model.clone();
            }
        }
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> CliResult<()> {
    let config = resolve(&cli)?;
    if cli.print_config {
        let text = serde_json::to_string_pretty(&config).expect("serializable config");
        // a closed pipe is not an error for a print-and-exit flag
        let _ = writeln!(std::io::stdout().lock(), "{text}");
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Usage("a subcommand is required (see --help)".into()));
    };
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match command {
        Command::Simulate => commands::simulate_cmd(&config, out),
        Command::Pobs { .. } => commands::pobs_cmd(&config, out),
        Command::Fit { .. } => commands::fit_cmd(&config, out),
        Command::Predict { .. } => commands::predict_cmd(&config, out),
        Command::Evaluate { .. } => commands::evaluate_cmd(&config, out),
        Command::Audit => commands::audit_cmd(&config, out),
        Command::Bench => commands::bench_cmd(&config, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
