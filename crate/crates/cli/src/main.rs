use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssdkit_cli::{emit, render, run_path, suite, CliError, Format, RunOptions, EXIT_USAGE};

/// Runs SSD-space scenarios and reports pass/fail per task.
///
/// Exit status: 0 all tasks passed, 1 some task failed, 2 some task was
/// inconclusive (and none failed), 3 usage, I/O or parse error.
#[derive(Parser, Debug)]
#[command(name = "ssdkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Overrides the solver iteration budget.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Records per-task wall time (output is then no longer byte-stable).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs one scenario file.
    Run { path: PathBuf },
    /// Runs the bundled regression scenarios.
    VerifySuite,
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Schema(format!("--tol must be positive, got {t}")));
        }
    }
    let opts = RunOptions { seed: cli.seed, tol: cli.tol, max_iters: cli.max_iters, timings: cli.timings };
    let (text, summary) = match &cli.command {
        Command::Run { path } => {
            let report = run_path(path, &opts)?;
            (render(&[&report], None, cli.format)?, report.summary)
        }
        Command::VerifySuite => {
            let s = suite::verify_suite(&opts)?;
            let refs: Vec<_> = s.scenarios.iter().collect();
            (render(&refs, Some(&s), cli.format)?, s.summary)
        }
    };
    emit(&text, cli.out.as_deref())?;
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ssdkit: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
