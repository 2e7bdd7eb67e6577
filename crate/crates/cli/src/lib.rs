//! Command-line driver: parses flags and config files, runs one command inside a sized worker
//! pool and emits the report plus CSV/JSON/SVG artifacts with provenance headers.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use anyhow::{Context, Result};
use choquard::LabError;
use config::{Cli, RunConfig, UsageError};
use output::{render_svg, write_artifacts, Kind, Outcome};
use std::ffi::OsString;
use std::io::Write;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command.as_str() {
        "constants" => commands::constants(cfg),
        "eigen" => commands::eigen(cfg),
        "rayleigh" => commands::rayleigh(cfg),
        "cinf" => commands::cinf(cfg),
        "groundstate" => commands::groundstate(cfg),
        "scan" => commands::scan(cfg),
        "landscape" => commands::landscape(cfg),
        "asymptotics" => commands::asymptotics(cfg),
        "verify" => verify::verify(cfg),
        other => Err(config::usage(format!("unknown command {other:?}"))),
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<UsageError>().is_some()
            || matches!(e.downcast_ref::<LabError>(), Some(LabError::InvalidParams(_) | LabError::Domain(_)))
    })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    let cfg = RunConfig::resolve(&cli.command, cli.flags)?;
    let threads = cfg.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("starting the worker pool")?;
    let outcome = pool.install(|| dispatch(&cfg))?;
    write!(out, "{}", output::with_header(&cfg, Kind::Text, &outcome.report))?;
    if let Some(dir) = &cfg.out {
        write_artifacts(&cfg, dir, &outcome)?;
    }
    if let (Some(path), Some(plot)) = (&cfg.plot, &outcome.plot) {
        std::fs::write(path, render_svg(&cfg, plot)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(!outcome.failed)
}

/// Runs the CLI on `args` (program name first), writing the report to `out` and diagnostics
/// to `err`. Returns the process exit status: 0 on success, 1 on solver or check failure,
/// 2 on usage errors and invalid parameters.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match config::parse_args(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(err, "one or more checks failed; see the report");
            EXIT_FAILURE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}
