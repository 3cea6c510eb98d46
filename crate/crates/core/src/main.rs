use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use floqlab::cli::{Command, Runner};

#[derive(Parser)]
#[command(name = "floqlab", version, about = "Floquet spectroscopy of periodically driven quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (directory for `run`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Accepted for compatibility; all computations are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Branch-continued quasienergies along the drive sweep.
    Quasienergies,
    /// Band-resolved susceptibility on the drive x probe grid.
    Susceptibility,
    /// Harmonic-resolved probe matrix elements.
    Dipoles,
    /// Symmetry verification, labels and validated selection rules.
    SymmetryReport,
    /// Relative magnitude of every matrix element along the sweep.
    DarkScan,
    /// Every artifact listed under `outputs`, written into `--out`.
    Run,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.seed.is_some() {
        log::info!("--seed has no effect");
    }
    let Some(config) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let runner = match Runner::from_path(&config, cli.workers) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let command = match cli.command {
        Cmd::Quasienergies => Command::Quasienergies,
        Cmd::Susceptibility => Command::Susceptibility,
        Cmd::Dipoles => Command::Dipoles,
        Cmd::SymmetryReport => Command::SymmetryReport,
        Cmd::DarkScan => Command::DarkScan,
        Cmd::Run => {
            let dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
            return match runner.run_all(&dir) {
                Ok(paths) => {
                    for p in paths {
                        log::info!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
    };

    let text = match runner.run(command) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
