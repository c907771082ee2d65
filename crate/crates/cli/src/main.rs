//! Command-line driver: single and extended-time simulations with method
//! comparison (`solve`), epsilon/delta parameter sweeps (`sweep`), and
//! null-basis diagnostics (`diag`). Machine-readable CSV/JSON reports only;
//! no plotting.
//!
//! Exit codes: 0 on success, 2 when a `solve` run fails to converge
//! (reports are still written), 3 on input errors.

mod report;
mod run;
mod scenario;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hydronet::solver::Method;

#[derive(Parser)]
#[command(name = "hydronet", version, about = "Demand-driven hydraulic network solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a network over one or more demand steps with selected methods.
    Solve(SolveArgs),
    /// Parameter sweep of the partial-update method over epsilon and delta.
    Sweep(SweepArgs),
    /// Null-basis diagnostics for a network.
    Diag(DiagArgs),
}

#[derive(Args)]
pub struct CommonSolver {
    /// Residual tolerance delta_N.
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Update-set parameter epsilon.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Maximum Newton iterations.
    #[arg(long, default_value_t = 100)]
    pub kmax: usize,
    /// Condition-number bound for the regularized diagonal.
    #[arg(long, default_value_t = 1e8)]
    pub kappa: f64,
    /// Head-delay fraction `a` used by nsm3.
    #[arg(long, default_value_t = 0.5)]
    pub head_delay: f64,
    /// Flow floor for the Schur method's diagonal inversion, in m³/s.
    #[arg(long, default_value_t = 1e-6)]
    pub floor: f64,
    /// Redo the symbolic factorization at every numeric factorization
    /// (ablation; numeric results are unchanged).
    #[arg(long)]
    pub no_symbolic_reuse: bool,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Network model in the supported INP subset.
    pub network: PathBuf,
    /// Methods to run (comma separated or repeated): gga, nsm1, nsm2, nsm3.
    #[arg(long = "method", value_delimiter = ',', default_values_t = ["gga".to_string(), "nsm1".to_string(), "nsm2".to_string(), "nsm3".to_string()])]
    pub methods: Vec<String>,
    /// Demand steps: `synthetic:N:SEED` or a CSV scenario file
    /// (header = junction ids, one row of m³/s demands per step).
    /// Defaults to a single step of base demands.
    #[arg(long)]
    pub steps: Option<String>,
    /// Timing repetitions (one warm-up pass is always discarded).
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[command(flatten)]
    pub solver: CommonSolver,
    /// Output directory for results.csv, summary.json and histograms.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    pub network: PathBuf,
    /// log10(epsilon) grid as `start:step:stop`.
    #[arg(long = "eps-grid", default_value = "-9:0.5:-1", allow_hyphen_values = true)]
    pub eps_grid: String,
    /// log10(delta_N) grid as `start:step:stop`.
    #[arg(long = "delta-grid", default_value = "-9:0.5:-3", allow_hyphen_values = true)]
    pub delta_grid: String,
    /// Demand steps, as for `solve`.
    #[arg(long)]
    pub steps: Option<String>,
    #[command(flatten)]
    pub solver: CommonSolver,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DiagArgs {
    pub network: PathBuf,
    /// Additionally dump Z in MatrixMarket coordinate format.
    #[arg(long)]
    pub dump_z: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_methods(raw: &[String]) -> anyhow::Result<Vec<Method>> {
    let mut out = Vec::new();
    for s in raw {
        let m: Method = s.parse().map_err(|e: String| anyhow::anyhow!(e))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    anyhow::ensure!(!out.is_empty(), "at least one method is required");
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => run::solve_command(&args),
        Command::Sweep(args) => sweep::sweep_command(&args),
        Command::Diag(args) => run::diag_command(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}
