//! Command-line front end: `bound`, `verify` and `table` over the steinbounds targets.

pub mod args;
pub mod output;
pub mod run;

use std::io::Write;

use args::{Cli, Command};
use run::{render_bound, render_table, render_verify, run_bound, run_table, run_verify, CliError, RunConfig};

/// Worker cap read at startup.
pub const THREADS_ENV: &str = "STEINBOUNDS_THREADS";

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn failure(e: &CliError, stdout: String) -> Outcome {
    Outcome { stdout, stderr: output::to_json(&e.to_json()), code: e.exit_code() }
}

/// Runs a parsed command without touching the process streams.
pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Bound(a) => {
            let cfg = RunConfig::from_args(a);
            match run_bound(&cfg) {
                Ok(r) => Outcome { stdout: render_bound(&cfg, &r), stderr: String::new(), code: 0 },
                // the report is still the payload
                Err(CliError::Inapplicable(r)) => {
                    let out = render_bound(&cfg, &r);
                    failure(&CliError::Inapplicable(r), out)
                }
                Err(e) => failure(&e, String::new()),
            }
        }
        Command::Verify(a) => {
            let cfg = RunConfig::from_args(a);
            match run_verify(&cfg) {
                Ok(v) => Outcome { stdout: render_verify(&cfg, &v), stderr: String::new(), code: v.exit_code() },
                Err(e) => failure(&e, String::new()),
            }
        }
        Command::Table(t) => {
            let cfg = RunConfig::from_args(&t.common);
            match run_table(&cfg, &t.sweep, t.truth) {
                Ok(rows) => Outcome { stdout: render_table(&rows, t.common.output), stderr: String::new(), code: 0 },
                Err(e) => failure(&e, String::new()),
            }
        }
    }
}

/// Parses `argv` and runs it. Usage errors exit with 3 so that 2 keeps meaning
/// "inapplicable"; help and version exit with 0.
pub fn main_with_args<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(&cli),
        Err(e) if e.use_stderr() => {
            let payload = serde_json::json!({ "error": "usage", "message": e.to_string().trim_end() });
            Outcome { stdout: String::new(), stderr: output::to_json(&payload), code: 3 }
        }
        Err(e) => Outcome { stdout: e.to_string(), stderr: String::new(), code: 0 },
    }
}

/// Caps the global worker pool from the environment.
pub fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// Writes an outcome to the process streams.
pub fn emit(o: &Outcome) {
    let _ = std::io::stdout().write_all(o.stdout.as_bytes());
    let _ = std::io::stderr().write_all(o.stderr.as_bytes());
}
