use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypoel::harness::{run_experiment, ExperimentKind};

/// Batch driver for bracket certification, backward solves, Itô-process
/// simulation, Monte Carlo cross-validation, and smoothing studies.
#[derive(Parser)]
#[command(name = "hypoel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment TOML config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the bracket spanning condition and emit a certificate.
    Certify(RunArgs),
    /// March the backward equation and emit norm ledgers and snapshots.
    Solve(RunArgs),
    /// Simulate Itô-process paths and summarize terminal statistics.
    Simulate(RunArgs),
    /// Compare Monte Carlo estimates against a solver reference.
    #[command(name = "cross-validate")]
    CrossValidate(RunArgs),
    /// Norm-gain table along the epsilon schedule with tail diagnostics.
    #[command(name = "smoothing-study")]
    SmoothingStudy(RunArgs),
    /// Grid-stability probe of the bracket-estimate ratio.
    #[command(name = "lemma42-probe")]
    Lemma42Probe(RunArgs),
    /// Verify the shifted-utility closed form against its estimator.
    #[command(name = "example12-verify")]
    Example12Verify(RunArgs),
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Certify(a) => (ExperimentKind::Certify, a),
            Command::Solve(a) => (ExperimentKind::Solve, a),
            Command::Simulate(a) => (ExperimentKind::Simulate, a),
            Command::CrossValidate(a) => (ExperimentKind::CrossValidate, a),
            Command::SmoothingStudy(a) => (ExperimentKind::SmoothingStudy, a),
            Command::Lemma42Probe(a) => (ExperimentKind::Lemma42Probe, a),
            Command::Example12Verify(a) => (ExperimentKind::Example12Verify, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match run_experiment(&args.config, Some(kind), args.seed, args.out) {
        Ok(outcome) => {
            println!(
                "{}: wrote {} artifact(s) to {}",
                kind.as_str(),
                outcome.artifacts.len(),
                outcome.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
