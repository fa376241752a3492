//! `spinthermo` command-line tool.

mod error;
mod fit;
mod manifest;
mod mc;
mod output;
mod scan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::{CliError, CliResult, EXIT_MISMATCH};
use manifest::Job;

#[derive(Debug, Parser)]
#[command(
    name = "spinthermo",
    version,
    about = "Thermodynamics of small spin systems: fits, scans and Monte Carlo"
)]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, env = "SPINTHERMO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Standardize a dataset and write its couplings.
    Fit(fit::FitArgs),
    /// Tabulate a family of thermodynamic curves.
    Scan(scan::ScanArgs),
    /// Metropolis sampling of the replica model.
    Mc(mc::McArgs),
    /// Re-run a recorded manifest and compare the outputs byte for byte.
    Replay {
        manifest: PathBuf,
        /// Rewrite the outputs instead of comparing them.
        #[arg(long)]
        write: bool,
    },
}

fn init_threads(requested: Option<usize>) -> CliResult<usize> {
    let n = match requested {
        Some(0) => return Err(CliError::usage("--threads must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::resource(e.to_string()))?;
    Ok(n)
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = init_threads(cli.threads)?;
    let job = match cli.command {
        Command::Fit(a) => Job::Fit(a),
        Command::Scan(a) => Job::Scan(a),
        Command::Mc(a) => Job::Mc(a),
        Command::Replay { manifest, write } => {
            let differing = manifest::replay(&manifest, write)?;
            if differing.is_empty() {
                println!(
                    "{}: {}",
                    manifest.display(),
                    if write { "rewritten" } else { "identical" }
                );
                return Ok(());
            }
            for path in &differing {
                eprintln!("differs: {}", path.display());
            }
            return Err(CliError {
                code: EXIT_MISMATCH,
                message: format!("{} output(s) differ", differing.len()),
            });
        }
    };
    let m = manifest::run_and_record(job, threads)?;
    for o in &m.outputs {
        println!("{}", o.path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
