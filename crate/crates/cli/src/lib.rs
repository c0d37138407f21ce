//! Command-line runner for domain shift measures and grounded training.
//!
//! [`run_command`] parses an argument list, runs one subcommand and writes a
//! [`report::RunReport`] as canonical JSON or CSV. Exit codes: 0 on success,
//! 1 on domain errors (reported on stderr as `{"error": kind, "message": ...}`),
//! 2 on usage errors.

pub mod commands;
pub mod dataset;
pub mod report;

use domainshift_core::corpus::{CorpusError, Warning};
use domainshift_core::histogram::HistogramError;
use domainshift_core::metrics::MetricsError;
use domainshift_core::smos::SmosError;
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

pub const SEED_ENV: &str = "DOMAINSHIFT_SEED";

/// A failure reported as structured JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub error: String,
    pub message: String,
    #[serde(skip)]
    pub usage: bool,
}

impl CliError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            error: kind.into(),
            message: message.into(),
            usage: false,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            usage: true,
            ..Self::new("UsageError", message)
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("IoError", format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl From<HistogramError> for CliError {
    fn from(e: HistogramError) -> Self {
        MetricsError::from(e).into()
    }
}

impl From<SmosError> for CliError {
    fn from(e: SmosError) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) {
    let line = serde_json::to_string(value).expect("plain data serializes");
    let _ = writeln!(out, "{line}");
}

/// Streams a warning to `stderr` as one JSON line.
pub fn warn(stderr: &mut dyn Write, w: &Warning) {
    json_line(stderr, w);
}

/// Runs one invocation. `argv[0]` is the program name; `env` looks up
/// environment variables.
pub fn run_command<I, T>(
    argv: I,
    env: &dyn Fn(&str) -> Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use clap::Parser;
    let cli = match commands::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
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
    match commands::execute(cli, env, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            json_line(stderr, &e);
            if e.usage {
                2
            } else {
                1
            }
        }
    }
}
