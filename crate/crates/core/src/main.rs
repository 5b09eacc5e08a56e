use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dirac_box::config::{ParsedConfig, SweepParam};
use dirac_box::runner;
use dirac_box::Error;

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "dirac-box", version, about = "Dirac particle in a box with a moving wall")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write the observable table.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the `threads` key.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the configuration once per parameter value.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Check invariants (and the oracle, if enabled) without writing tables.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ParsedConfig, (u8, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
    ParsedConfig::parse(&text).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn runtime(e: Error) -> (u8, String) {
    match e {
        Error::Io(_) => (EXIT_IO, e.to_string()),
        Error::Config(_) => (EXIT_CONFIG, e.to_string()),
        _ => (EXIT_RUNTIME, e.to_string()),
    }
}

fn main_inner(cli: Cli) -> Result<(), (u8, String)> {
    match cli.command {
        Command::Run { config, out, threads } => {
            let mut parsed = load(&config)?;
            if let Some(n) = threads {
                if n == 0 {
                    return Err((EXIT_CONFIG, "--threads must be at least 1".into()));
                }
                parsed.config.threads = n;
                parsed.defaults_applied.retain(|k| k != "threads");
            }
            let summary = runner::run(&parsed, &out).map_err(runtime)?;
            println!("wrote {} records to {}", summary.trajectory.records.len(), out.display());
            if let Some(d) = summary.oracle_discrepancy {
                println!("oracle energy discrepancy {d:.3e}");
            }
        }
        Command::Sweep { config, param, values, out } => {
            let parsed = load(&config)?;
            let param: SweepParam = param.parse().map_err(|e: Error| (EXIT_CONFIG, e.to_string()))?;
            let summary = runner::sweep(&parsed, param, &values, &out).map_err(runtime)?;
            for e in &summary.entries {
                println!("{} = {} -> {}", param.name(), e.value, e.dir.display());
            }
            for c in &summary.convergence {
                println!("n_max {} -> {}: max |dE| = {:.3e}", c.coarse, c.fine, c.max_abs_delta_energy);
            }
        }
        Command::Validate { config } => {
            let parsed = load(&config)?;
            let checks = runner::validate(&parsed.config).map_err(runtime)?;
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| !c.passed) {
                return Err((EXIT_VALIDATION, "validation failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
