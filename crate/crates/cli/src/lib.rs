//! Front end for the `dirnorm` experiments: flag and config handling,
//! thread control and CSV output.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

pub use args::Cli;
pub use config::Config;
pub use output::{Cell, Table};

pub const DEFAULT_SEED: u64 = dirnorm::DEFAULT_SEED;
pub const THREADS_ENV: &str = "DIRNORM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags or config; exit code 2.
    Usage(String),
    /// Output could not be written; exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dirnorm::Error> for CliError {
    fn from(e: dirnorm::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// What a command produced: its table, summary lines, and whether any
/// built-in check failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
    pub failed: bool,
}

/// Parses `argv`, runs the command and returns the process exit code.
/// The CSV goes to `--out` when given, else to `stdout`; summary lines go
/// to `stdout` when the CSV went to a file, else to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(stderr, "\n{}", Cli::command().render_usage());
            }
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = match &cli.global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let threads = resolve_threads(cli.global.threads, &cfg, std::env::var(THREADS_ENV).ok())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(cli, &cfg))?;

    let out = cfg.pick_opt(cli.global.out.clone(), "out", |s| Ok(s.into()))?;
    let summary_sink: &mut dyn Write = match &out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            outcome.table.write_to(BufWriter::new(file))?;
            stdout
        }
        None => {
            outcome.table.write_to(&mut *stdout)?;
            &mut *stderr
        }
    };
    for line in &outcome.summary {
        writeln!(summary_sink, "{line}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    if outcome.table.skipped() > 0 {
        writeln!(
            stderr,
            "skipped {} row(s) with non-finite values or no interior evaluation points",
            outcome.table.skipped()
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(if outcome.failed { 1 } else { 0 })
}

/// Flag, then config, then the environment; `0` lets rayon use all cores.
pub fn resolve_threads(
    flag: Option<usize>,
    cfg: &Config,
    env: Option<String>,
) -> Result<usize, CliError> {
    let from_cfg = cfg.pick_opt(flag, "threads", args::parse_usize)?;
    match (from_cfg, env) {
        (Some(n), _) => Ok(n),
        (None, Some(raw)) => {
            args::parse_usize(&raw).map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
        }
        (None, None) => Ok(0),
    }
}
