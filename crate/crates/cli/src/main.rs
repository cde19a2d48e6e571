//! `optspec` command-line interface.
//!
//! Exit codes: 0 solved or success, 2 compile error, 3 runtime error,
//! 4 model gateway failure, 64 usage or configuration error, 65 invalid
//! data, schema or empty input, 70 internal error, 74 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{GlobalFlags, Resolved};

pub const EXIT_COMPILE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_GATEWAY: u8 = 4;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_INTERNAL: u8 = 70;
pub const EXIT_IO: u8 = 74;

/// A command's failure: exit code plus message for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(EXIT_DATA, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(EXIT_IO, message)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "optspec",
    version,
    about = "Generate, solve and evaluate optimization specifications from problem descriptions"
)]
struct Cli {
    /// Configuration file (TOML); flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Model backend: a name from the config's [backends] or scripted:<script.toml>
    #[arg(long, global = true, value_name = "NAME")]
    llm_backend: Option<String>,
    /// Bench worker threads [default: 1]
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for fixture generators; recorded in the config digest
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Wall-clock limit for external-runtime executions in seconds [default: 60]
    #[arg(long, global = true, value_name = "SECS")]
    timeout: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Ampl,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Step 1 only: list objectives, parameters, variables and constraints
    Structure {
        /// Bundle directory or a plain description file
        input: PathBuf,
    },
    /// Bind a bundle's tables to parameters and print the data document
    Bind {
        /// Bundle directory with tables/ and binding.manifest
        bundle: PathBuf,
        /// Structured problem whose symbol metadata the bound data must match
        #[arg(long, value_name = "PATH")]
        structure: Option<PathBuf>,
        /// Output document format
        #[arg(long, value_enum, default_value = "ampl")]
        format: DataFormat,
        /// Only report what would be bound
        #[arg(long)]
        check: bool,
        /// Write the document here instead of standard output
        #[arg(long, short, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Generate one specification for a bundle without executing it
    Generate {
        /// Bundle directory
        bundle: PathBuf,
        /// Variant label, e.g. Ampl4
        variant: String,
        /// Write the specification here instead of standard output
        #[arg(long, short, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Solve a model with an optional data document
    Solve {
        /// Model file
        model: PathBuf,
        /// Data file
        data: Option<PathBuf>,
        /// single, lexicographic, or weighted:Name=w,...
        #[arg(long, default_value = "single", value_name = "POLICY")]
        objective: String,
        /// Print the outcome as JSON
        #[arg(long)]
        json: bool,
    },
    /// Run one variant on one bundle and store the record
    Run {
        /// Bundle directory
        bundle: PathBuf,
        /// Variant label, e.g. Ampl4
        variant: String,
        /// Repetition index stored in the record
        #[arg(long, default_value_t = 0, value_name = "K")]
        run_index: usize,
        /// Record store directory [default: from config, else ./records]
        #[arg(long, value_name = "DIR")]
        records: Option<PathBuf>,
    },
    /// Run every bundle under a dataset directory through a variant matrix
    Bench {
        /// Directory whose subdirectories are bundles
        dataset: PathBuf,
        /// Matrix file (TOML) with `labels`, optional `runs` and [[variant]] tables
        #[arg(long, value_name = "PATH")]
        matrix: Option<PathBuf>,
        /// Repetitions per cell, overriding the variants
        #[arg(long, value_name = "N")]
        runs: Option<usize>,
        /// Record store directory [default: from config, else ./records]
        #[arg(long, value_name = "DIR")]
        records: Option<PathBuf>,
        /// Stop after this many newly executed cells
        #[arg(long, value_name = "N")]
        stop_after: Option<usize>,
    },
    /// Summarize stored records into Markdown and CSV tables
    Report {
        /// Record store or directory of record files
        records: PathBuf,
        /// Comparisons to test (TOML with [[comparison]] tables)
        #[arg(long, value_name = "PATH")]
        comparisons: Option<PathBuf>,
        /// Output directory [default: <records>/report]
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let flags = GlobalFlags {
        config: cli.config,
        llm_backend: cli.llm_backend,
        jobs: cli.jobs,
        seed: cli.seed,
        timeout: cli.timeout,
    };
    let cfg = Resolved::load(&flags)?;
    eprintln!("config digest: {}", cfg.digest());
    match cli.command {
        Command::Structure { input } => commands::structure(&cfg, &input),
        Command::Bind {
            bundle,
            structure,
            format,
            check,
            output,
        } => commands::bind(&bundle, structure.as_deref(), format, check, output.as_deref()),
        Command::Generate { bundle, variant, output } => commands::generate(&cfg, &bundle, &variant, output.as_deref()),
        Command::Solve {
            model,
            data,
            objective,
            json,
        } => commands::solve(&cfg, &model, data.as_deref(), &objective, json),
        Command::Run {
            bundle,
            variant,
            run_index,
            records,
        } => commands::run(&cfg, &bundle, &variant, run_index, records),
        Command::Bench {
            dataset,
            matrix,
            runs,
            records,
            stop_after,
        } => commands::bench(&cfg, &dataset, matrix.as_deref(), runs, records, stop_after),
        Command::Report { records, comparisons, out } => commands::report(&records, comparisons.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
