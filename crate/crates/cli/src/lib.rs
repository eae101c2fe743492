//! Scenario runner for the `ssdkit` toolkit.
//!
//! A scenario is a TOML file naming a space, some functions, operators and
//! point sets, and an ordered list of tasks. Running it produces a report with
//! one record per task; see `docs/scenario-schema.md` for the format.

pub mod build;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod tasks;

use std::path::Path;

pub use report::{Format, Report, Status, SuiteReport, Summary, TaskRecord};
pub use scenario::{Scenario, VERBS};
pub use tasks::{run_scenario, RunOptions};

/// Exit code for usage, I/O, parse and reference errors.
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("reference error: {0}")]
    Reference(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Reads, parses and runs one scenario file.
pub fn run_path(path: &Path, opts: &RunOptions) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let sc = Scenario::parse(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    run_scenario(&sc, &label, opts)
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Encodes one or more scenario reports in the requested format.
pub fn render(reports: &[&Report], suite: Option<&SuiteReport>, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => match suite {
            Some(s) => report::to_json(s),
            None => report::to_json(reports[0]),
        },
        Format::Csv => report::to_csv(reports)?,
    })
}
