use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topoflow::config::{BackendName, RunConfig};
use topoflow::{commands, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "topoflow", version, about = "Bulk-edge correspondence checks for the odd-viscous shallow-water model")]
struct Cli {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendName>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Band table and Chern numbers.
    Bulk,
    /// Edge branches and essential spectrum edges along the configured loops.
    EdgeSpectrum,
    /// Spectral flow along the configured loops.
    SpectralFlow,
    /// Scattering amplitude phase and winding along the scattering loops.
    Scattering,
    /// Robin Laplacian eigenvalue curve and pump flow.
    RobinDemo,
    /// Full acceptance suite.
    Verify,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(b) = cli.backend {
        cfg.backend = b;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = cli.out.as_path();
    let written = match cli.command {
        Command::Bulk => commands::bulk(&cfg, out),
        Command::EdgeSpectrum => commands::edge_spectrum(&cfg, out),
        Command::SpectralFlow => commands::spectral_flow_cmd(&cfg, out),
        Command::Scattering => commands::scattering(&cfg, out),
        Command::RobinDemo => commands::robin_demo(&cfg, out),
        Command::Verify => commands::verify_cmd(&cfg, out),
    }?;
    for p in written.0 {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOPOFLOW_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
