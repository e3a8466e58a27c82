use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use parabmo::{run_command, write_outputs, Command, Error, RunConfig, OUT_ENV};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Seminorm,
    Maximal,
    VerifyBounded,
    Sandwich,
    Dyadic,
    Cz,
    Chain,
    Jn,
    Oneside,
    Diverge,
    Manifest,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Seminorm => Command::Seminorm,
            Cmd::Maximal => Command::Maximal,
            Cmd::VerifyBounded => Command::VerifyBounded,
            Cmd::Sandwich => Command::Sandwich,
            Cmd::Dyadic => Command::Dyadic,
            Cmd::Cz => Command::Cz,
            Cmd::Chain => Command::Chain,
            Cmd::Jn => Command::Jn,
            Cmd::Oneside => Command::Oneside,
            Cmd::Diverge => Command::Diverge,
            Cmd::Manifest => Command::Manifest,
        }
    }
}

/// Parabolic BMO experiments on space-time lattices.
///
/// Writes `<command>.json` (and `<command>.csv`) to the output directory.
/// Exit status: 0 when every invariant holds, 1 when one fails, 2 on
/// usage, configuration or runtime errors.
#[derive(Debug, Parser)]
#[command(name = "parabmo", version)]
struct Cli {
    /// Command to run; falls back to `command` in the config file.
    command: Option<Cmd>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and PARABMO_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; only effective with the `parallel` feature.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let command: Command = match (cli.command, &cfg.command) {
        (Some(c), _) => c.into(),
        (None, Some(name)) => name.parse()?,
        (None, None) => return Err(Error::Config("no command given on the command line or in the config".into())),
    };
    cfg.command = Some(command.name().to_string());
    if let Some(dir) = cli.out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)) {
        cfg.output.dir = dir;
    }
    configure_threads(cli.threads)?;

    let out = run_command(command, &cfg)?;
    let files = write_outputs(&cfg.output.dir.clone(), command, &cfg, &out)?;
    for c in &out.checks {
        println!("{} {}{}", if c.holds { "ok  " } else { "FAIL" }, c.name, detail(&c.detail));
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(out.ok())
}

fn detail(d: &str) -> String {
    if d.is_empty() || d.len() > 120 {
        String::new()
    } else {
        format!(" ({d})")
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), Error> {
    if threads.is_some_and(|k| k == 0) {
        return Err(Error::Config("--threads must be positive".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
