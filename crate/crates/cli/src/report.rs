use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;
use std::process::ExitCode;

pub const TOOL: &str = "normality-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: "usage", message: message.into() }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: "io", message: format!("{}: {e}", path.display()) }
    }
}

impl From<normality_lab::Error> for CliError {
    fn from(e: normality_lab::Error) -> Self {
        Self { code: e.code(), message: e.to_string() }
    }
}

impl From<normality_lab::dseq::DseqError> for CliError {
    fn from(e: normality_lab::dseq::DseqError) -> Self {
        Self { code: e.code(), message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// What a subcommand produces: a JSON report, or CSV for flat sweeps.
pub enum Output {
    Json(Value),
    Text(String),
}

/// Wraps a result with the tool name, version, subcommand and full config.
pub fn envelope(command: &str, config: &impl Serialize, result: &impl Serialize) -> Output {
    Output::Json(json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config": config,
        "result": result,
    }))
}

pub fn emit(out: &Output, path: Option<&Path>) -> CliResult<()> {
    let text = match out {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
            s.push('\n');
            s
        }
        Output::Text(s) => s.clone(),
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn fail(e: &CliError) -> ExitCode {
    let body = json!({ "error": { "code": e.code, "message": e.message } });
    eprintln!("{body}");
    ExitCode::from(if e.code == "usage" { 2 } else { 1 })
}
