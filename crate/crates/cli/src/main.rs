mod commands;
mod config;
mod error;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Command;
use config::{Format, RunConfig};
use error::CliError;

/// Interval exchange transformations and their Schrödinger operators.
#[derive(Debug, Parser)]
#[command(name = "iet", version)]
struct Cli {
    /// JSON config with optional `iet`, `function`, `seed` and `format`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Permutation of the IET, e.g. "3 2 1".
    #[arg(long, global = true)]
    perm: Option<String>,
    /// Comma-separated lengths, decimals or `p/q`.
    #[arg(long, global = true)]
    lengths: Option<String>,
    /// Rotation by `alpha` (decimal, `p/q` or `golden`) as a 2-interval IET.
    #[arg(long, global = true, conflicts_with = "perm")]
    rotation: Option<String>,
    /// Exact rational arithmetic.
    #[arg(long, global = true)]
    rational: bool,
    /// `constant:C`, `cosine:L`, `trig:C0;a1,..;b1,..`, or JSON.
    #[arg(long, global = true, allow_hyphen_values = true)]
    function: Option<String>,
    #[command(subcommand)]
    command: Command,
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(path) => config::read_config_file(path)?,
        None => Default::default(),
    };
    let iet = match (&cli.perm, &cli.lengths, &cli.rotation) {
        (Some(p), Some(l), None) => Some(config::iet_from_flags(p, l, cli.rational)?),
        (None, None, Some(alpha)) => Some(config::iet_from_rotation(alpha, cli.rational)?),
        (None, None, None) => file.iet.map(|s| match s {
            config::IetSource::Inline(spec) => spec,
            config::IetSource::Path(_) => unreachable!("paths are inlined on read"),
        }),
        _ => return Err(CliError::usage("give --perm with --lengths, or --rotation")),
    };
    let function = match &cli.function {
        Some(text) => Some(config::parse_function(text)?),
        None => file.function.map(|s| match s {
            config::FunctionSource::Inline(spec) => spec,
            config::FunctionSource::Path(_) => unreachable!("paths are inlined on read"),
        }),
    };
    let format = cli
        .format
        .or(file.format)
        .unwrap_or_else(|| cli.command.default_format());
    Ok(RunConfig {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        format,
        iet,
        function,
        command: cli.command,
    })
}

fn execute(cfg: &RunConfig, threads: Option<usize>, out: Option<&PathBuf>) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))?;
    let body = pool.install(|| commands::run(cfg))?;
    let text = config::render(cfg, &body);
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::usage(format!("cannot write output: {e}"))),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    let out = cli.out.clone();
    let cfg = match &cli.command {
        Command::Replay(args) => {
            let text = fs::read_to_string(&args.artifact)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.artifact.display())))?;
            config::config_of_artifact(&text)?
        }
        _ => resolve(cli)?,
    };
    execute(&cfg, threads, out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
