//! Command-line front end.
//!
//! `critsense <command> --config <path> [--out <path>] [--format csv|json] [--threads N]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 1 I/O failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

pub use config::{parse_pairs, Command, ConfigError, EngineKind, RunConfig};
pub use output::{format_sig, write_atomic, ResultRecord, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CommandArg {
    #[value(name = "sweep-g1d")]
    SweepG1d,
    Scaling,
    #[value(name = "optimize-2d")]
    Optimize2d,
    Efficiency,
    #[value(name = "qfi-point")]
    QfiPoint,
}

impl CommandArg {
    fn name(&self) -> &'static str {
        match self {
            CommandArg::SweepG1d => "sweep-g1d",
            CommandArg::Scaling => "scaling",
            CommandArg::Optimize2d => "optimize-2d",
            CommandArg::Efficiency => "efficiency",
            CommandArg::QfiPoint => "qfi-point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "critsense", version, about = "Global sensing with critical Ising-chain probes")]
struct Cli {
    command: CommandArg,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for grid and quadrature fan-out.
    #[arg(long)]
    threads: Option<usize>,
    /// Override a configuration key, e.g. `--set length=12`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(crate::Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical(e) if e.is_input_error() => EXIT_CONFIG,
            RunError::Numerical(_) => EXIT_NUMERICAL,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

/// Resolve the configuration from file text, the command and overrides.
pub fn resolve_config(
    command: &str,
    file_text: &str,
    overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    let mut pairs = parse_pairs(file_text)?;
    pairs.insert("command".into(), command.into());
    for (k, v) in overrides {
        pairs.insert(k.clone(), v.clone());
    }
    RunConfig::from_pairs(&pairs)
}

/// Run a resolved configuration into a record.
pub fn run_config(cfg: &RunConfig) -> Result<(ResultRecord, Vec<String>), RunError> {
    let started = Instant::now();
    let work = || commands::execute(cfg);
    let outcome = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Config(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
    .map_err(RunError::Numerical)?;
    let config: Map<String, Value> = cfg.to_pairs().into_iter().map(|(k, v)| (k, Value::from(v))).collect();
    let record = ResultRecord {
        tool: "critsense".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cfg.command.name().into(),
        config,
        table: outcome.table,
        summary: outcome.summary,
        diagnostics: outcome.diagnostics,
        timing: json!({ "elapsed_seconds": started.elapsed().as_secs_f64() }),
    };
    Ok((record, outcome.warnings))
}

/// Sidecar path for the summary record of a CSV output.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn emit(record: &ResultRecord, out: Option<&Path>, format: Format) -> Result<(), RunError> {
    match (format, out) {
        (Format::Csv, Some(path)) => {
            write_atomic(path, &record.table.to_csv()).map_err(RunError::Io)?;
            let summary = serde_json::to_string_pretty(&record.summary_json()).expect("serializable") + "\n";
            write_atomic(&summary_path(path), &summary).map_err(RunError::Io)
        }
        (Format::Csv, None) => {
            print!("{}", record.table.to_csv());
            Ok(())
        }
        (Format::Json, Some(path)) => write_atomic(path, &record.to_json()).map_err(RunError::Io),
        (Format::Json, None) => {
            print!("{}", record.to_json());
            Ok(())
        }
    }
}

fn split_override(s: &str) -> Result<(String, String), RunError> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(RunError::Config(format!("--set expects KEY=VALUE, got '{s}'"))),
    }
}

fn run_cli(cli: Cli) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut overrides = cli.set.iter().map(|s| split_override(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(t) = cli.threads {
        overrides.push(("threads".into(), t.to_string()));
    }
    let cfg = resolve_config(cli.command.name(), &text, &overrides)?;
    let (record, warnings) = run_config(&cfg)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    emit(&record, cli.out.as_deref(), cli.format)
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("critsense: {e}");
            e.exit_code()
        }
    }
}
