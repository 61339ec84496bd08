//! `psq`: configuration-driven experiments on processor-sharing queues with
//! impatient jobs.
//!
//! Subcommands wrap the library layers one-to-one: `steady` solves the
//! fixed-point equation, `fluid` solves the fluid trajectory, `simulate`
//! runs scaled replications of the stochastic queue, and `converge` compares
//! the two. Every command is a pure function of the config file and flags;
//! all randomness flows from the single `seed` key.
//!
//! Exit codes: 0 success, 2 invalid config, 3 model infeasible, 4 numerical
//! non-convergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use psq_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "psq",
    version,
    about = "Processor-sharing queues with reneging: fluid model and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the `[output].dir` config key).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override a config key, e.g. --set model.lambda=2.0 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Override the master seed (equivalent to --set seed=N).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,

    /// Size of the worker pool for parallel replications (default: cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the steady-state fixed point and write the report CSV.
    Steady,
    /// Solve the fluid trajectory and write trajectory/measure CSVs.
    Fluid,
    /// Run scaled simulator replications and write summary CSVs.
    Simulate,
    /// Run the simulator-vs-fluid convergence experiment.
    Converge,
}

/// Command failure carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: the config file is missing, malformed, or invalid.
    Config(Vec<String>),
    /// Exit 3: the model fails a feasibility condition required here.
    Infeasible(String),
    /// Exit 4: a solver exhausted its budget or an expectation diverged.
    Numerical(String),
    /// Exit 1: I/O failure.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn report(&self) {
        match self {
            CliError::Config(errors) => {
                eprintln!("invalid configuration:");
                for e in errors {
                    eprintln!("  {e}");
                }
            }
            CliError::Infeasible(msg) => eprintln!("model infeasible: {msg}"),
            CliError::Numerical(msg) => eprintln!("numerical failure: {msg}"),
            CliError::Io(msg) => eprintln!("io error: {msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Infeasible(f) => CliError::Infeasible(f.join("; ")),
            CoreError::NoConvergence { .. }
            | CoreError::Bracket(_)
            | CoreError::Nonintegrable(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(vec![other.to_string()]),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<config::RawConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(vec!["--config PATH is required".into()]))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?;

    for set in &cli.sets {
        apply_override(&mut table, set)?;
    }
    if let Some(seed) = cli.seed {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }

    table
        .try_into()
        .map_err(|e| CliError::Config(vec![format!("config: {e}")]))
}

/// Applies one `section.key=value` override onto the raw TOML tree. The
/// value is parsed with TOML syntax, so strings need quotes and floats need
/// a decimal point or exponent.
fn apply_override(table: &mut toml::Table, set: &str) -> Result<(), CliError> {
    let (key_path, value_text) = set
        .split_once('=')
        .ok_or_else(|| CliError::Config(vec![format!("--set {set}: expected KEY=VALUE")]))?;
    let parsed: toml::Table = format!("x = {value_text}")
        .parse()
        .map_err(|e| CliError::Config(vec![format!("--set {set}: bad value: {e}")]))?;
    let value = parsed["x"].clone();

    let mut node = table;
    let parts: Vec<&str> = key_path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(vec![format!("--set {set}: {part} is not a table")]))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = load_config(&cli).and_then(|raw| {
        let ctx = commands::Context {
            raw,
            out_dir: cli.out.clone(),
            quiet: cli.quiet,
        };
        match cli.command {
            Command::Steady => commands::cmd_steady(&ctx),
            Command::Fluid => commands::cmd_fluid(&ctx),
            Command::Simulate => commands::cmd_simulate(&ctx),
            Command::Converge => commands::cmd_converge(&ctx),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
