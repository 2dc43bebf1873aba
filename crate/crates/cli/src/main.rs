// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{Purpose, RunConfig};
use error::CliError;

/// Spectral laboratory for the focusing fractional NLS.
#[derive(Parser)]
#[command(name = "fnls", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `outputs.directory`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (0 lets the pool decide).
    #[arg(long, global = true, env = "FNLS_THREADS")]
    threads: Option<usize>,
    /// Progress messages on stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve for Q (or build W) and write the profile and threshold constants.
    GroundState,
    /// Run the flow and write diagnostics.csv and blowup_report.json.
    Evolve,
    /// Check the identities and estimates on the configured state.
    Verify,
    /// Evaluate the blow-up criteria for the initial state.
    Classify,
    /// Run the `[sweep]` grid of configurations.
    Sweep,
}

impl From<Command> for Purpose {
    fn from(c: Command) -> Self {
        match c {
            Command::GroundState => Purpose::GroundState,
            Command::Evolve => Purpose::Evolve,
            Command::Verify => Purpose::Verify,
            Command::Classify => Purpose::Classify,
            Command::Sweep => Purpose::Sweep,
        }
    }
}

pub(crate) fn run_command(purpose: Purpose, cfg: &RunConfig, dir: &Path) -> Result<Value, CliError> {
    match purpose {
        Purpose::GroundState => commands::ground_state(cfg, dir),
        Purpose::Evolve => commands::evolve_cmd(cfg, dir),
        Purpose::Verify => commands::verify(cfg, dir),
        Purpose::Classify => commands::classify_cmd(cfg, dir),
        Purpose::Sweep => sweep::sweep(cfg, dir),
    }
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.output {
        cfg.outputs.directory = dir.clone();
    }
    let purpose = Purpose::from(cli.command);
    cfg.validate(purpose)?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size the thread pool: {e}")))?;
    }
    let dir = cfg.outputs.directory.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    let summary = run_command(purpose, &cfg, &dir)?;
    Ok(json!({ "output": dir, "summary": summary }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    match run(&cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("plain data"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
