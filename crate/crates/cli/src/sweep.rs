//! The `sweep` command: run the partial-update method over a grid of
//! (epsilon, delta_N) pairs and record iteration counts, final residuals and
//! non-convergence flags. Grids are always complete; a cell that hits k_max
//! is flagged, never omitted.

use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::Context;
use hydronet::solver::{precompute, solve_nsm, Method, SolverConfig};
use serde::Serialize;

use crate::report;
use crate::run::{build_config, load_network};
use crate::scenario::{self, ScenarioSource};
use crate::SweepArgs;

/// Parses a MATLAB-style `start:step:stop` triple of log10 values into the
/// inclusive list of grid points.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    anyhow::ensure!(parts.len() == 3, "grid `{spec}` must be start:step:stop");
    let start: f64 = parts[0].parse().context("grid start")?;
    let step: f64 = parts[1].parse().context("grid step")?;
    let stop: f64 = parts[2].parse().context("grid stop")?;
    anyhow::ensure!(step > 0.0, "grid step must be positive");
    anyhow::ensure!(stop >= start, "grid stop below start");
    let mut points = Vec::new();
    let mut x = start;
    while x <= stop + 1e-9 {
        points.push(x);
        x += step;
    }
    Ok(points)
}

#[derive(Serialize)]
struct SweepMeta {
    schema_version: u32,
    network: String,
    scenario: ScenarioSource,
    steps: usize,
    method: Method,
    log10_eps_grid: Vec<f64>,
    log10_delta_grid: Vec<f64>,
    /// (log10_eps, log10_delta) cells where some step hit k_max.
    flagged_cells: Vec<(f64, f64)>,
}

pub fn sweep_command(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let eps_grid = parse_grid(&args.eps_grid)?;
    let delta_grid = parse_grid(&args.delta_grid)?;
    let net = load_network(&args.network)?;
    let (scenario, source) = scenario::load(args.steps.as_deref(), &net)?;
    std::fs::create_dir_all(&args.out)?;

    let pre = precompute(&net)?;

    let mut iterations = vec![vec![0usize; delta_grid.len()]; eps_grid.len()];
    let mut residuals = vec![vec![0.0f64; delta_grid.len()]; eps_grid.len()];
    let mut flags = vec![vec![false; delta_grid.len()]; eps_grid.len()];

    for (ei, &le) in eps_grid.iter().enumerate() {
        for (di, &ld) in delta_grid.iter().enumerate() {
            let mut cfg: SolverConfig = build_config(&args.solver, Method::Nsm2)?;
            cfg.epsilon = 10f64.powf(le);
            cfg.delta_n = 10f64.powf(ld);
            cfg.validate()?;
            let mut total_iter = 0usize;
            let mut worst_residual = 0.0f64;
            let mut hit_kmax = false;
            for d in scenario.steps() {
                let res = solve_nsm(&net, d, &cfg, &pre)?;
                total_iter += res.iterations;
                worst_residual =
                    worst_residual.max(res.residual_history.last().copied().unwrap_or(f64::NAN));
                hit_kmax |= !res.converged;
            }
            iterations[ei][di] = total_iter;
            residuals[ei][di] = worst_residual;
            flags[ei][di] = hit_kmax;
        }
    }

    write_grid(
        &args.out.join("sweep_iterations.csv"),
        &eps_grid,
        &delta_grid,
        |e, d| iterations[e][d].to_string(),
    )?;
    write_grid(
        &args.out.join("sweep_residual.csv"),
        &eps_grid,
        &delta_grid,
        |e, d| format!("{:e}", residuals[e][d]),
    )?;
    write_grid(
        &args.out.join("sweep_flags.csv"),
        &eps_grid,
        &delta_grid,
        |e, d| (flags[e][d] as u8).to_string(),
    )?;

    let mut flagged_cells = Vec::new();
    for (ei, &le) in eps_grid.iter().enumerate() {
        for (di, &ld) in delta_grid.iter().enumerate() {
            if flags[ei][di] {
                flagged_cells.push((le, ld));
            }
        }
    }
    let meta = SweepMeta {
        schema_version: report::SCHEMA_VERSION,
        network: args.network.display().to_string(),
        scenario: source,
        steps: scenario.len(),
        method: Method::Nsm2,
        log10_eps_grid: eps_grid,
        log10_delta_grid: delta_grid,
        flagged_cells,
    };
    report::write_json(&args.out.join("sweep.json"), &meta)?;
    Ok(ExitCode::SUCCESS)
}

/// Rows are epsilon values, columns delta values, both as log10.
fn write_grid(
    path: &std::path::Path,
    eps: &[f64],
    delta: &[f64],
    cell: impl Fn(usize, usize) -> String,
) -> anyhow::Result<()> {
    let mut out = String::from("log10_eps\\log10_delta");
    for d in delta {
        write!(out, ",{d}")?;
    }
    out.push('\n');
    for (ei, e) in eps.iter().enumerate() {
        write!(out, "{e}")?;
        for di in 0..delta.len() {
            write!(out, ",{}", cell(ei, di))?;
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
