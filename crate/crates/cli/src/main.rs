//! `qladder` — exact evolution and spectra of solvable bosonic ladder
//! models, emitted as reproducible CSV/JSON tables.

mod commands;
mod output;
mod spec;

use clap::{Parser, Subcommand};

use commands::Outcome;

#[derive(Parser)]
#[command(name = "qladder", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a model spec.
    #[command(subcommand)]
    Model(ModelAction),
    /// Tabulate the exact series coefficients g for one starting index.
    Gfactors(commands::GfactorsArgs),
    /// Evolve a state through U(tau) with certified error bounds.
    Evolve(commands::EvolveArgs),
    /// Eigenvalues (optionally eigenvectors) of the subspace Hamiltonian.
    Spectrum(commands::SpectrumArgs),
    /// The zero-energy stationary state with exact squared amplitudes.
    Stationary(commands::StationaryArgs),
    /// Cross-check every fast path against the dense oracle.
    Verify(commands::VerifyArgs),
}

#[derive(Subcommand)]
enum ModelAction {
    /// Print dimension, betas, and the reducibility flag.
    Show(commands::ShowArgs),
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves exit code 2 for itself; the contract here is
            // 1 for usage problems, 0 for --help/--version.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // Positive tolerances are a config invariant, not a computation failure.
    let tol_check = match &cli.command {
        Command::Evolve(a) => commands::validate_tol(a.tol),
        Command::Spectrum(a) => commands::validate_tol(a.tol),
        Command::Verify(a) => commands::validate_tol(a.tol),
        _ => Ok(()),
    };
    if let Err(e) = tol_check {
        eprintln!("usage error: {e}");
        return 1;
    }
    let result = match &cli.command {
        Command::Model(ModelAction::Show(a)) => commands::model_show(a),
        Command::Gfactors(a) => commands::gfactors(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Spectrum(a) => commands::spectrum_cmd(a),
        Command::Stationary(a) => commands::stationary(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Mismatch) => 3,
        // A reader closing the pipe early (| head) is its call, not ours.
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        cause
            .downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
