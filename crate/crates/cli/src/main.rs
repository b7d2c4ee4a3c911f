use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use demoreq_cli::{
    cmd_analyze, cmd_export_dot, cmd_validate, cmd_what_if, load_config, AnalyzeOptions, Outcome, OutputFormat,
};

/// Demonstrator feasibility analysis for multi-work-package research projects.
///
/// Exit codes: 0 success, 1 I/O or syntax error, 2 schema, reference,
/// validation, config or override error, 3 targets unmet or impractical
/// combination, 4 feedback iteration limit exceeded.
#[derive(Parser)]
#[command(name = "demoreq", version)]
struct Cli {
    /// Engine configuration file (TOML).
    #[arg(long, global = true, env = "DEMOREQ_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// What-if override, e.g. `wp.WP2.estimated_trl=5` or `demo.D1.covered_wps+=WP1`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    sets: Vec<String>,
    #[arg(long, value_name = "N")]
    max_iterations: Option<u32>,
    /// Warn about unknown keys instead of rejecting the file.
    #[arg(long)]
    lenient: bool,
}

impl AnalyzeArgs {
    fn options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            format: match self.format {
                Format::Text => OutputFormat::Text,
                Format::Machine => OutputFormat::Machine,
            },
            sets: self.sets.clone(),
            max_iterations: self.max_iterations,
            lenient: self.lenient,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file for schema and consistency errors.
    Validate {
        file: PathBuf,
        #[arg(long)]
        lenient: bool,
    },
    /// Run the full analysis and print the report.
    Analyze(AnalyzeArgs),
    /// Compare the analysis with and without `--set` overrides.
    WhatIf(AnalyzeArgs),
    /// Write the dependency graph in Graphviz DOT format.
    ExportDot {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        lenient: bool,
    },
}

fn emit(outcome: Outcome) -> ExitCode {
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { file, lenient } => cmd_validate(file, *lenient),
        Command::ExportDot { file, out, lenient } => cmd_export_dot(file, out.as_deref(), *lenient),
        Command::Analyze(args) | Command::WhatIf(args) => match load_config(cli.config.as_deref()) {
            Err(o) => o,
            Ok(config) if matches!(cli.command, Command::Analyze(_)) => cmd_analyze(&args.file, &config, &args.options()),
            Ok(config) => cmd_what_if(&args.file, &config, &args.options()),
        },
    };
    emit(outcome)
}
