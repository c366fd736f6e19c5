//! Command-line runner for the thermal cavity-QED / compressible-flow
//! equivalence: samples trajectories and fields, runs the independent
//! quantum oracle, refines trajectory self-intersections and verifies the
//! flow equations, emitting reproducible CSV/JSON artifacts with manifests.

mod commands;
mod config;
mod manifest;
mod output;

use clap::{Parser, Subcommand};

use crate::config::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "jcmflow",
    version,
    about = "Closed-form thermal cavity-QED Bloch dynamics and its compressible-flow picture",
    after_help = "Environment:\n  JCMFLOW_THREADS  caps internal parallelism (default: available cores)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the Bloch trajectory on a uniform time grid
    Trajectory(commands::TrajectoryArgs),
    /// Evaluate the Eulerian flow on a lower-half-disk lattice
    Field(commands::FieldArgs),
    /// Compare the closed form against exact Fock-space evolution
    OracleCheck(commands::OracleCheckArgs),
    /// Detect and refine trajectory self-intersections
    Intersections(commands::IntersectionsArgs),
    /// Momentum and continuity residuals at random screened samples
    Residuals(commands::ResidualsArgs),
    /// Cross-check the closed-form density against quadrature
    Density(commands::DensityArgs),
    /// Monte Carlo estimate of the field Hamiltonian
    Energy(commands::EnergyArgs),
}

fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("JCMFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .map_err(|_| CliError::Usage(format!("JCMFLOW_THREADS must be a positive integer, got `{raw}`")))?;
    if threads == 0 {
        return Err(CliError::Usage("JCMFLOW_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Trajectory(args) => commands::run_trajectory(args),
        Command::Field(args) => commands::run_field(args),
        Command::OracleCheck(args) => commands::run_oracle_check(args),
        Command::Intersections(args) => commands::run_intersections(args),
        Command::Residuals(args) => commands::run_residuals(args),
        Command::Density(args) => commands::run_density(args),
        Command::Energy(args) => commands::run_energy(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = init_thread_pool() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
    if let Err(e) = run(&cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
