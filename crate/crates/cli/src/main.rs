use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use consensus_accel::experiment::{design_filter, emit_density, run_pipeline, write_outputs, WORKERS_ENV};
use consensus_accel::{Error, ExperimentConfig, MatrixKind, Scheme};

/// Consensus acceleration experiments on random graphs.
#[derive(Parser)]
#[command(name = "consensus-accel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment described by a config file.
    Run { config: PathBuf },
    /// Write the Monte Carlo spectral density of a matrix kind, plus a
    /// single-realization estimate next to it.
    Density {
        config: PathBuf,
        /// adjacency, laplacian or row-normalized-laplacian
        #[arg(long)]
        matrix: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Design one minimax filter and write it as JSON.
    Design {
        config: PathBuf,
        #[arg(long)]
        degree: usize,
        /// Weight scheme; defaults to the first configured.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a config file without running anything.
    Validate { config: PathBuf },
}

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_ERROR: u8 = 3;

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config_error() {
        ExitCode::from(CONFIG_ERROR)
    } else if e.is_numerical_error() {
        ExitCode::from(NUMERICAL_ERROR)
    } else {
        ExitCode::FAILURE
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    exit_code(e)
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(CONFIG_ERROR)
    })
}

fn configure_workers() {
    let Ok(value) = std::env::var(WORKERS_ENV) else { return };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size worker pool: {e}");
            }
        }
        _ => log::warn!("ignoring {WORKERS_ENV}={value}: not a positive integer"),
    }
}

fn run(command: Command) -> Result<(), ExitCode> {
    match command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!(
                "ok: {} nodes, schemes {:?}, methods {:?}, degrees {:?}, {} trials",
                cfg.model.node_count(),
                cfg.schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
                cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
                cfg.degrees,
                cfg.trials
            );
        }
        Command::Run { config } => {
            let cfg = load(&config)?;
            let outcome = run_pipeline(&cfg).map_err(|e| fail(&e))?;
            write_outputs(&outcome, &cfg.output_dir).map_err(|e| fail(&e))?;
            println!(
                "wrote {} rows to {}",
                outcome.result.rows.len(),
                cfg.output_dir.join("rates.csv").display()
            );
        }
        Command::Density { config, matrix, output } => {
            let cfg = load(&config)?;
            let kind = MatrixKind::parse(&matrix).ok_or_else(|| {
                eprintln!("error: unknown matrix kind `{matrix}`");
                ExitCode::from(CONFIG_ERROR)
            })?;
            let files = emit_density(&cfg, kind, &output).map_err(|e| fail(&e))?;
            println!("wrote {} and {}", files.monte_carlo.display(), files.single.display());
        }
        Command::Design {
            config,
            degree,
            scheme,
            output,
        } => {
            let cfg = load(&config)?;
            let scheme = match scheme {
                Some(s) => Some(Scheme::parse(&s).ok_or_else(|| {
                    eprintln!("error: unknown scheme `{s}`");
                    ExitCode::from(CONFIG_ERROR)
                })?),
                None => None,
            };
            let filter = design_filter(&cfg, degree, scheme).map_err(|e| fail(&e))?;
            filter.save(&output).map_err(|e| fail(&e))?;
            println!("wrote degree-{degree} filter (ε = {:.6e}) to {}", filter.achieved_eps(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_workers();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
