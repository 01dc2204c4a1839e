//! `pgdflow`: full-order solves, a priori and a posteriori PGD runs,
//! compression, comparisons and drag response surfaces of the swimmer
//! study, driven by a TOML run configuration.
//!
//! Exit codes: 0 on success, 1 on a numerical failure, 2 on a usage or
//! configuration error (including unreadable input files).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "pgdflow", version, about = "A priori vs a posteriori PGD for parametrised Stokes flow")]
struct Cli {
    /// Run configuration (TOML); defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `run.threads`; 1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Parameter value, comma separated (`solve`, `surface`).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    /// Separated solution file (`compress`, `surface`; overrides
    /// `compress.input`).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Full-order solve at `--mu`: field export and drag values.
    Solve,
    /// A priori PGD run.
    Apriori,
    /// Snapshots and a posteriori PGD separation.
    Aposteriori,
    /// Recompresses a separated solution.
    Compress,
    /// Runs the configured methods and writes the comparison table.
    Compare,
    /// Drag response surface of a separated solution.
    Surface,
    /// Writes the generated swimmer mesh.
    GenMesh,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<pgdflow::Error> for Failure {
    fn from(e: pgdflow::Error) -> Self {
        Failure {
            code: if e.is_numerical() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::usage)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    if let Some(i) = &cli.input {
        cfg.compress.input = Some(i.clone());
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = effective_config(&cli)?;
    #[cfg(feature = "parallel")]
    if cfg.run.threads > 1 {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global();
    }
    let mu = cli.mu.as_deref();
    match cli.command {
        Command::Solve => commands::solve(&cfg, mu),
        Command::Apriori => commands::apriori(&cfg),
        Command::Aposteriori => commands::aposteriori(&cfg),
        Command::Compress => commands::compress(&cfg),
        Command::Compare => commands::compare(&cfg),
        Command::Surface => commands::surface(&cfg, mu),
        Command::GenMesh => commands::gen_mesh(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
