//! `r2c`: compress prompts, inspect token scores, and run evaluations.
//!
//! Exit status is 0 on success, 1 on runtime failures (validation,
//! transport, I/O) and 2 on usage errors.

mod commands;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::settings::CommonArgs;

#[derive(Debug, Parser)]
#[command(name = "r2c", version, about = "Coarse-to-fine prompt compression")]
struct Cli {
    /// TOML file with default settings (flags and environment win)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a prompt or a file of prompts
    Compress(CompressArgs),
    /// Print chunk, sentence and token scores as JSON
    Score(ScoreArgs),
    /// Compress a dataset and write a report
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// The whole input is one context
    Text,
    /// One prompt object per line
    Jsonl,
    /// NQ-style records
    Nq,
    /// LongBench-style records
    Longbench,
}

#[derive(Debug, clap::Args)]
pub struct InputArgs {
    /// Input file; standard input when absent or `-`
    #[arg(long, short)]
    input: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = InputFormat::Text)]
    input_format: InputFormat,

    /// Question for text input
    #[arg(long, default_value = "")]
    question: String,

    /// Instruction for text input
    #[arg(long, default_value = "")]
    instruction: String,
}

#[derive(Debug, clap::Args)]
pub struct CompressArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    input: InputArgs,

    /// Output file; standard output when absent
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Write an audit record per prompt to standard error
    #[arg(long)]
    audit: bool,

    /// Write audit records to this file instead
    #[arg(long, value_name = "FILE")]
    audit_file: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    input: InputArgs,
}

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Dataset file, one JSON record per line
    #[arg(long)]
    dataset: PathBuf,

    /// nq or longbench
    #[arg(long)]
    format: String,

    /// Stop at the first malformed row instead of skipping it
    #[arg(long)]
    strict: bool,

    /// Records compressed in parallel
    #[arg(long)]
    jobs: Option<usize>,

    /// full, chunk-only, sentence-only, or token-only
    #[arg(long, default_value = "full")]
    ablation: String,

    /// Evaluate a seeded sample of this fraction of the records
    #[arg(long, value_name = "FRACTION")]
    sample: Option<f64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Reply of the stub generator; enables Span EM
    #[arg(long, value_name = "TEXT")]
    generator_reply: Option<String>,

    /// Report path without extension; writes STEM.csv and STEM.json
    #[arg(long, default_value = "r2c-report")]
    report: PathBuf,

    /// Print the effective settings to standard error
    #[arg(long)]
    audit: bool,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<r2c_core::Error> for Failure {
    fn from(e: r2c_core::Error) -> Self {
        match e {
            r2c_core::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<r2c_eval::EvalError> for Failure {
    fn from(e: r2c_eval::EvalError) -> Self {
        use r2c_eval::EvalError;
        match e {
            EvalError::Core(inner) => inner.into(),
            EvalError::Config(_) | EvalError::UnknownFormat(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Compress(args) => commands::compress(cli.config.as_deref(), args),
        Command::Score(args) => commands::score(cli.config.as_deref(), args),
        Command::Evaluate(args) => commands::evaluate(cli.config.as_deref(), args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("r2c: usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("r2c: {msg}");
            ExitCode::FAILURE
        }
    }
}
