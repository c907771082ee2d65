//! Report writers. The CSV payload is purely numeric telemetry and is
//! bit-reproducible for a given run spec and seed; wall-clock figures live
//! in the JSON summary and are marked non-normative there.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hydronet::solver::{BlockTiming, Method, SolverResult};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub fn write_results_csv(path: &Path, rows: &[StepRecord]) -> anyhow::Result<()> {
    let mut out = String::new();
    out.push_str(
        "method,step,label,converged,iterations,final_residual,max_continuity_residual,\
         update_evals_total,headloss_evals,head_solves,numeric_factorizations,flow_updates\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{},{},{},{},{}",
            r.method,
            r.step,
            r.label,
            r.converged,
            r.iterations,
            r.final_residual,
            r.max_continuity_residual,
            r.update_evals_total,
            r.headloss_evals,
            r.head_solves,
            r.numeric_factorizations,
            r.flow_updates,
        )?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub struct StepRecord {
    pub method: Method,
    pub step: usize,
    pub label: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub max_continuity_residual: f64,
    pub update_evals_total: u64,
    pub headloss_evals: u64,
    pub head_solves: u64,
    pub numeric_factorizations: u64,
    pub flow_updates: u64,
}

impl StepRecord {
    pub fn from_result(step: usize, label: &str, res: &SolverResult) -> Self {
        Self {
            method: res.method,
            step,
            label: label.to_string(),
            converged: res.converged,
            iterations: res.iterations,
            final_residual: res.residual_history.last().copied().unwrap_or(f64::NAN),
            max_continuity_residual: res.max_continuity_residual,
            update_evals_total: res.update_set_sizes.iter().map(|&s| s as u64).sum(),
            headloss_evals: res.headloss_evals,
            head_solves: res.head_solves,
            numeric_factorizations: res.numeric_factorizations,
            flow_updates: res.flow_updates,
        }
    }
}

#[derive(Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub steps: usize,
    pub converged_steps: usize,
    pub total_iterations: usize,
    pub headloss_evals: u64,
    pub head_solves: u64,
    /// Mean wall time per repetition over the whole scenario, milliseconds.
    pub mean_ms: f64,
    pub min_ms: f64,
    /// Per-block attribution accumulated over the last timed repetition.
    pub blocks: BlockTiming,
}

/// Histogram of log10|q| with zero flows binned separately (|q| below
/// 1e-14 m³/s counts as zero).
#[derive(Serialize)]
pub struct FlowHistogram {
    pub schema_version: u32,
    pub method: Method,
    pub step: usize,
    pub bin_width_log10: f64,
    pub bin_edges_log10: Vec<f64>,
    pub counts: Vec<usize>,
    pub zero_flows: usize,
}

pub fn flow_histogram(method: Method, step: usize, q: &[f64]) -> FlowHistogram {
    const ZERO: f64 = 1e-14;
    const WIDTH: f64 = 0.5;
    let logs: Vec<f64> = q
        .iter()
        .filter(|&&x| x.abs() > ZERO)
        .map(|&x| x.abs().log10())
        .collect();
    let zero_flows = q.len() - logs.len();
    if logs.is_empty() {
        return FlowHistogram {
            schema_version: SCHEMA_VERSION,
            method,
            step,
            bin_width_log10: WIDTH,
            bin_edges_log10: vec![],
            counts: vec![],
            zero_flows,
        };
    }
    let lo = (logs.iter().cloned().fold(f64::MAX, f64::min) / WIDTH).floor() * WIDTH;
    let hi = (logs.iter().cloned().fold(f64::MIN, f64::max) / WIDTH).ceil() * WIDTH;
    let nbins = (((hi - lo) / WIDTH).round() as usize).max(1);
    let mut counts = vec![0usize; nbins];
    for l in &logs {
        let mut b = ((l - lo) / WIDTH).floor() as usize;
        if b >= nbins {
            b = nbins - 1;
        }
        counts[b] += 1;
    }
    let bin_edges_log10 = (0..=nbins).map(|i| lo + WIDTH * i as f64).collect();
    FlowHistogram {
        schema_version: SCHEMA_VERSION,
        method,
        step,
        bin_width_log10: WIDTH,
        bin_edges_log10,
        counts,
        zero_flows,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}
