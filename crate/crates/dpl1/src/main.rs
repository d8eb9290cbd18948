use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpl1::commands::{cmd_audit, cmd_fit, cmd_net, cmd_sweep, cmd_synth};
use dpl1::config::Config;
use dpl1::error::{CliError, CliResult};

/// Differentially private l1 regression experiments.
#[derive(Debug, Parser)]
#[command(name = "dpl1", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file, or output directory for `sweep`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Synth,
    /// Fit a dataset privately and write the estimate as JSON.
    Fit {
        /// Dataset CSV with header x0,...,x{d-1},y.
        #[arg(long)]
        data: PathBuf,
    },
    /// Exactly audit the privacy guarantee on neighbor pairs.
    Audit,
    /// Run an excess-risk scaling sweep.
    Sweep,
    /// Export a covering net as CSV.
    Net,
}

fn required<'a>(flag: &str, v: &'a Option<PathBuf>) -> CliResult<&'a Path> {
    v.as_deref()
        .ok_or_else(|| CliError::invalid(format!("--{flag} is required")))
}

fn run(cli: &Cli) -> CliResult<String> {
    let config_path = required("config", &cli.config)?;
    let out = required("out", &cli.out)?;
    if cli.threads == 0 {
        return Err(CliError::invalid("--threads must be at least 1"));
    }
    let cfg = Config::load(config_path)?;
    let seed = cfg.root_seed(cli.seed)?;
    match &cli.command {
        Command::Synth => cmd_synth(&cfg, seed, out),
        Command::Fit { data } => cmd_fit(&cfg, seed, data, out),
        Command::Audit => cmd_audit(&cfg, seed, out),
        Command::Sweep => cmd_sweep(&cfg, config_path, seed, cli.threads, out),
        Command::Net => cmd_net(&cfg, seed, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
