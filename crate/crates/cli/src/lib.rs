//! Command implementations behind the `demoreq` binary. Each command returns
//! its output and exit code instead of printing, so it can be tested in
//! process.

pub mod dot;
pub mod text;

use std::path::Path;

use demoreq_core::engine::{
    diff_reports, parse_overrides, run, AnalysisReport, ConfigError, EngineConfig, EngineError,
};
use demoreq_core::model::{has_errors, parse_model_with, validate_model, ModelError, ParseOptions, ProjectModel, Severity};

/// Exit codes. Each failure condition maps to exactly one code.
pub mod exit {
    /// Success; for `analyze`, every demonstrator meets its target.
    pub const OK: i32 = 0;
    /// The model or config file cannot be read, or the model is not well-formed.
    pub const IO_OR_SYNTAX: i32 = 1;
    /// Schema, reference, validation, config or override error.
    pub const INVALID: i32 = 2;
    /// Analysis ran but a target is unmet or a combination is impractical.
    pub const TARGETS_UNMET: i32 = 3;
    /// Feedback did not settle within the iteration limit.
    pub const ITERATION_LIMIT: i32 = 4;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Text,
    Machine,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Outcome { code, stdout: String::new(), stderr }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    pub format: OutputFormat,
    pub sets: Vec<String>,
    pub max_iterations: Option<u32>,
    pub lenient: bool,
}

pub fn machine(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialize");
    s.push('\n');
    s
}

pub fn parse_machine(text: &str) -> Result<AnalysisReport, serde_json::Error> {
    serde_json::from_str(text)
}

fn config_failure(e: &ConfigError) -> Outcome {
    let code = match e {
        ConfigError::Io { .. } => exit::IO_OR_SYNTAX,
        _ => exit::INVALID,
    };
    Outcome::fail(code, e.to_string())
}

fn engine_failure(e: &EngineError) -> Outcome {
    match e {
        EngineError::Config(c) => config_failure(c),
        EngineError::IterationLimitExceeded { .. } => Outcome::fail(exit::ITERATION_LIMIT, e.to_string()),
        EngineError::ValidationFailed { diagnostics } => Outcome::fail(
            exit::INVALID,
            diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"),
        ),
        _ => Outcome::fail(exit::INVALID, e.to_string()),
    }
}

/// Reads and parses a model; warnings about ignored keys go to `stderr`.
pub fn load_model(path: &Path, lenient: bool, stderr: &mut String) -> Result<ProjectModel, Outcome> {
    let bytes = std::fs::read(path)
        .map_err(|e| Outcome::fail(exit::IO_OR_SYNTAX, format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_model_with(&bytes, ParseOptions { strict: !lenient }).map_err(|e| {
        let code = match e {
            ModelError::Syntax { .. } => exit::IO_OR_SYNTAX,
            _ => exit::INVALID,
        };
        Outcome::fail(code, format!("{}: {e}", path.display()))
    })?;
    for w in parsed.warnings {
        stderr.push_str(&format!("warning: {w}\n"));
    }
    Ok(parsed.model)
}

pub fn cmd_validate(path: &Path, lenient: bool) -> Outcome {
    let mut stderr = String::new();
    let model = match load_model(path, lenient, &mut stderr) {
        Ok(m) => m,
        Err(o) => return o,
    };
    let diagnostics = validate_model(&model);
    let mut stdout = String::new();
    for d in &diagnostics {
        match d.severity {
            Severity::Error => stderr.push_str(&format!("{d}\n")),
            _ => stdout.push_str(&format!("{d}\n")),
        }
    }
    let code = if has_errors(&diagnostics) { exit::INVALID } else { exit::OK };
    if code == exit::OK {
        stdout.push_str(&format!("{}: valid\n", path.display()));
    }
    Outcome { code, stdout, stderr }
}

fn analysis(
    path: &Path,
    config: &EngineConfig,
    opts: &AnalyzeOptions,
    sets: &[String],
    stderr: &mut String,
) -> Result<(ProjectModel, EngineConfig, AnalysisReport), Outcome> {
    let mut config = config.clone();
    if let Some(n) = opts.max_iterations {
        config.max_feedback_iterations = n;
    }
    let model = load_model(path, opts.lenient || !config.strict_schema, stderr)?;
    let overrides = parse_overrides(sets).map_err(|e| Outcome::fail(exit::INVALID, e.to_string()))?;
    let report = run(&model, &config, &overrides).map_err(|e| engine_failure(&e))?;
    Ok((model, config, report))
}

fn gate(report: &AnalysisReport) -> i32 {
    if report.has_shortfall() || report.has_impractical() {
        exit::TARGETS_UNMET
    } else {
        exit::OK
    }
}

fn with_stderr(mut o: Outcome, stderr: String) -> Outcome {
    o.stderr.insert_str(0, &stderr);
    o
}

pub fn cmd_analyze(path: &Path, config: &EngineConfig, opts: &AnalyzeOptions) -> Outcome {
    let mut stderr = String::new();
    match analysis(path, config, opts, &opts.sets, &mut stderr) {
        Ok((_, _, report)) => Outcome {
            code: gate(&report),
            stdout: match opts.format {
                OutputFormat::Text => text::render_report(&report),
                OutputFormat::Machine => machine(&report),
            },
            stderr,
        },
        Err(o) => with_stderr(o, stderr),
    }
}

/// Compares the baseline analysis with one under `opts.sets`; the exit code
/// gates on the overridden run.
pub fn cmd_what_if(path: &Path, config: &EngineConfig, opts: &AnalyzeOptions) -> Outcome {
    let mut stderr = String::new();
    let base = match analysis(path, config, opts, &[], &mut stderr) {
        Ok((_, _, r)) => r,
        Err(o) => return with_stderr(o, stderr),
    };
    let changed = match analysis(path, config, opts, &opts.sets, &mut String::new()) {
        Ok((_, _, r)) => r,
        Err(o) => return with_stderr(o, stderr),
    };
    let diff = diff_reports(&base, &changed).expect("both runs analyze the same project");
    let stdout = match opts.format {
        OutputFormat::Text => text::render_diff(&diff),
        OutputFormat::Machine => {
            let mut s = serde_json::to_string_pretty(&diff).expect("diffs always serialize");
            s.push('\n');
            s
        }
    };
    Outcome { code: gate(&changed), stdout, stderr }
}

pub fn cmd_export_dot(path: &Path, out: Option<&Path>, lenient: bool) -> Outcome {
    let mut stderr = String::new();
    let model = match load_model(path, lenient, &mut stderr) {
        Ok(m) => m,
        Err(o) => return with_stderr(o, stderr),
    };
    let diagnostics = validate_model(&model);
    if has_errors(&diagnostics) {
        let errors: Vec<String> =
            diagnostics.iter().filter(|d| d.severity == Severity::Error).map(|d| d.to_string()).collect();
        return with_stderr(Outcome::fail(exit::INVALID, errors.join("\n")), stderr);
    }
    let dot = dot::render_dot(&model);
    match out {
        Some(file) => match std::fs::write(file, dot) {
            Ok(()) => Outcome { code: exit::OK, stdout: String::new(), stderr },
            Err(e) => with_stderr(
                Outcome::fail(exit::IO_OR_SYNTAX, format!("cannot write {}: {e}", file.display())),
                stderr,
            ),
        },
        None => Outcome { code: exit::OK, stdout: dot, stderr },
    }
}

/// Engine config from an explicit file, the environment, or defaults.
pub fn load_config(path: Option<&Path>) -> Result<EngineConfig, Outcome> {
    match path {
        Some(p) => EngineConfig::load(p),
        None => EngineConfig::from_env(),
    }
    .map_err(|e| config_failure(&e))
}
