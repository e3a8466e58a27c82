//! Driver for `parabmo-core`: TOML run configs, field CSV files, versioned
//! JSON reports and the command implementations behind the `parabmo` binary.
//!
//! Every command returns a [`CommandOutput`]: named invariant checks, a JSON
//! results object and an optional CSV table. The binary writes
//! `<command>.json` and `<command>.csv` and exits with 1 iff a check fails.

pub mod commands;
pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use commands::{run_command, Command, CommandOutput};
pub use config::RunConfig;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "PARABMO_OUT";

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] parabmo_core::Error),
}

/// One named invariant and whether it held on this run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            holds,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<'a> {
    pub schema: u32,
    pub command: &'a str,
    pub ok: bool,
    pub config: &'a RunConfig,
    pub checks: &'a [Check],
    pub results: &'a serde_json::Value,
}

impl<'a> Report<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, out: &'a CommandOutput) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            command,
            ok: out.ok(),
            config,
            checks: &out.checks,
            results: &out.results,
        }
    }
}

/// Writes `<command>.json` and, if a table was produced and CSV output is
/// enabled, `<command>.csv` into `dir`.
pub fn write_outputs(dir: &Path, command: Command, cfg: &RunConfig, out: &CommandOutput) -> Result<Vec<PathBuf>, Error> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |e| Error::Io { path, source: e }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = command.name();
    let json_path = dir.join(format!("{name}.json"));
    // the output directory is left out so reports compare equal across runs
    let mut shown = cfg.clone();
    shown.output.dir = PathBuf::new();
    let mut text = serde_json::to_string_pretty(&Report::new(name, &shown, out))?;
    text.push('\n');
    std::fs::write(&json_path, text).map_err(io_err(&json_path))?;
    let mut written = vec![json_path];
    if let (Some(table), true) = (&out.table, cfg.output.csv) {
        let csv_path = dir.join(format!("{name}.csv"));
        let file = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
        table.write(std::io::BufWriter::new(file))?;
        written.push(csv_path);
    }
    Ok(written)
}
