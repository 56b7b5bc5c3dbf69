use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reebkit::cli::{execute, Command};

/// Reeb dynamics, Conley-Zehnder indices and contact-metric curvature.
///
/// Built-in models, as {"name": ..., "params": {...}} with defaults:
/// heisenberg {theta_prime: 2}, su2 {theta_prime: 2},
/// sl2 {theta_prime: 0.5, rate: 1, orbit_length: 1}, t3 {n: 1, theta_prime: 2},
/// ellipsoid {a: 1, b: 1.414, theta_prime: 2, chart: 0}, catmap {sign: 1}.
/// Positional shorthand such as "t3(2)" or "ellipsoid(1,2)" is accepted
/// wherever a model name is.
#[derive(Parser)]
#[command(name = "reebkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Conley-Zehnder index of a sampled symplectic path, or the axiom driver.
    Index(Opts),
    /// Refine a Reeb orbit, linearize it and compute its index.
    Orbit(Opts),
    /// Curvature sweep over sample points and directions.
    Curvature(Opts),
    /// Domination, contact-pair and curvature-bound verdicts.
    Anosov(Opts),
    /// Chern-Hamilton energy of the compatible metric.
    Energy(Opts),
}

#[derive(Args)]
struct Opts {
    /// Run spec, or the input document itself.
    #[arg(long, aliases = ["path", "model"])]
    spec: PathBuf,
    /// Directory for report files; JSON goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random draw; overrides the run spec.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, o) = match cli.command {
        Cmd::Index(o) => (Command::Index, o),
        Cmd::Orbit(o) => (Command::Orbit, o),
        Cmd::Curvature(o) => (Command::Curvature, o),
        Cmd::Anosov(o) => (Command::Anosov, o),
        Cmd::Energy(o) => (Command::Energy, o),
    };
    ExitCode::from(execute(cmd, &o.spec, o.out.as_deref(), o.seed) as u8)
}
