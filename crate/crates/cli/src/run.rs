//! The `solve` and `diag` commands.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use hydronet::net::{parse_inp, Network};
use hydronet::nullbasis::{build_fundamental_basis, diagnostics};
use hydronet::solver::{
    precompute, solve_gga_with, solve_nsm, BlockTiming, GgaWorkspace, Method, Precomputed,
    SolverConfig, SolverResult,
};
use hydronet::sparse::write_matrix_market;
use serde::Serialize;

use crate::report::{self, FlowHistogram, MethodSummary, StepRecord};
use crate::scenario::{self, ScenarioSource};
use crate::{DiagArgs, SolveArgs};

pub fn load_network(path: &Path) -> anyhow::Result<Network> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading network `{}`", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(Network::from_json(&text)?)
    } else {
        Ok(parse_inp(&text)?)
    }
}

pub fn build_config(common: &crate::CommonSolver, method: Method) -> anyhow::Result<SolverConfig> {
    let cfg = SolverConfig {
        method,
        delta_n: common.delta,
        epsilon: common.epsilon,
        k_max: common.kmax,
        kappa_bar: common.kappa,
        head_delay_fraction: common.head_delay,
        gga_flow_floor: common.floor,
        reuse_symbolic: !common.no_symbolic_reuse,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct NetworkInfo {
    path: String,
    n_pipes: usize,
    n_junctions: usize,
    n_fixed: usize,
    n_loops: usize,
}

impl NetworkInfo {
    fn new(path: &Path, net: &Network) -> Self {
        Self {
            path: path.display().to_string(),
            n_pipes: net.n_pipes(),
            n_junctions: net.n_junctions(),
            n_fixed: net.n_fixed(),
            n_loops: net.n_loops(),
        }
    }
}

#[derive(Serialize)]
struct SolveSummary {
    schema_version: u32,
    network: NetworkInfo,
    scenario: ScenarioSource,
    steps: usize,
    repetitions: usize,
    config: SolverConfig,
    /// Wall-clock figures vary with the machine and are not part of the
    /// reproducible payload.
    timing_non_normative: bool,
    precompute_null_space_ms: f64,
    precompute_schur_ms: f64,
    methods: Vec<MethodSummary>,
    cross_method_max_dq: f64,
    cross_method_max_dh: f64,
    all_converged: bool,
}

struct MethodRun {
    results: Vec<SolverResult>,
    rep_times_ms: Vec<f64>,
    blocks: BlockTiming,
}

fn run_scenario(
    method: Method,
    cfg: &SolverConfig,
    net: &Network,
    steps: &[Vec<f64>],
    pre: &Precomputed,
    gga: &GgaWorkspace,
    reps: usize,
) -> anyhow::Result<MethodRun> {
    let solve_all = |collect: bool| -> anyhow::Result<(Vec<SolverResult>, BlockTiming)> {
        let mut results = Vec::new();
        let mut blocks = BlockTiming::default();
        for d in steps {
            let res = match method {
                Method::Gga => solve_gga_with(gga, net, d, cfg)?,
                _ => solve_nsm(net, d, cfg, pre)?,
            };
            blocks.linear_solves_ms += res.timing.linear_solves_ms;
            blocks.headloss_ms += res.timing.headloss_ms;
            blocks.matmat_ms += res.timing.matmat_ms;
            blocks.other_ms += res.timing.other_ms;
            blocks.total_ms += res.timing.total_ms;
            if collect {
                results.push(res);
            }
        }
        Ok((results, blocks))
    };

    // Warm-up pass provides the numeric results (identical across passes)
    // and is excluded from the timing statistics.
    let (results, mut blocks) = solve_all(true)?;
    let mut rep_times_ms = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        let (_, b) = solve_all(false)?;
        rep_times_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        blocks = b;
    }
    Ok(MethodRun {
        results,
        rep_times_ms,
        blocks,
    })
}

pub fn solve_command(args: &SolveArgs) -> anyhow::Result<ExitCode> {
    let methods = crate::parse_methods(&args.methods)?;
    anyhow::ensure!(args.reps >= 1, "--reps must be at least 1");
    let net = load_network(&args.network)?;
    let (scenario, source) = scenario::load(args.steps.as_deref(), &net)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory `{}`", args.out.display()))?;

    // Per-network preprocessing, timed separately from the simulations.
    let t0 = Instant::now();
    let pre = precompute(&net)?;
    let precompute_null_space_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t0 = Instant::now();
    let gga = GgaWorkspace::new(&net)?;
    let precompute_schur_ms = t0.elapsed().as_secs_f64() * 1e3;

    let labels: Vec<String> = match scenario.labels() {
        Some(l) => l.to_vec(),
        None => (0..scenario.len()).map(|i| format!("t{i}")).collect(),
    };

    let mut rows: Vec<StepRecord> = Vec::new();
    let mut summaries = Vec::new();
    let mut per_method_results: Vec<(Method, Vec<SolverResult>)> = Vec::new();
    let mut all_converged = true;
    for &method in &methods {
        let cfg = build_config(&args.solver, method)?;
        let run = run_scenario(method, &cfg, &net, scenario.steps(), &pre, &gga, args.reps)?;
        for (step, res) in run.results.iter().enumerate() {
            all_converged &= res.converged;
            rows.push(StepRecord::from_result(step, &labels[step], res));
        }
        let mean_ms = run.rep_times_ms.iter().sum::<f64>() / run.rep_times_ms.len() as f64;
        let min_ms = run.rep_times_ms.iter().cloned().fold(f64::MAX, f64::min);
        summaries.push(MethodSummary {
            method,
            steps: scenario.len(),
            converged_steps: run.results.iter().filter(|r| r.converged).count(),
            total_iterations: run.results.iter().map(|r| r.iterations).sum(),
            headloss_evals: run.results.iter().map(|r| r.headloss_evals).sum(),
            head_solves: run.results.iter().map(|r| r.head_solves).sum(),
            mean_ms,
            min_ms,
            blocks: run.blocks,
        });
        per_method_results.push((method, run.results));
    }

    // Cross-method agreement on every step.
    let mut max_dq = 0.0f64;
    let mut max_dh = 0.0f64;
    for step in 0..scenario.len() {
        for i in 0..per_method_results.len() {
            for j in i + 1..per_method_results.len() {
                let (a, b) = (
                    &per_method_results[i].1[step],
                    &per_method_results[j].1[step],
                );
                max_dq = max_dq.max(max_abs_diff(&a.q, &b.q));
                max_dh = max_dh.max(max_abs_diff(&a.h, &b.h));
            }
        }
    }

    report::write_results_csv(&args.out.join("results.csv"), &rows)?;
    for (method, results) in &per_method_results {
        let last = results.len() - 1;
        let hist: FlowHistogram = report::flow_histogram(*method, last, &results[last].q);
        report::write_json(&args.out.join(format!("histogram_{method}.json")), &hist)?;
    }
    let summary = SolveSummary {
        schema_version: report::SCHEMA_VERSION,
        network: NetworkInfo::new(&args.network, &net),
        scenario: source,
        steps: scenario.len(),
        repetitions: args.reps,
        config: build_config(&args.solver, methods[0])?,
        timing_non_normative: true,
        precompute_null_space_ms,
        precompute_schur_ms,
        methods: summaries,
        cross_method_max_dq: max_dq,
        cross_method_max_dh: max_dh,
        all_converged,
    };
    report::write_json(&args.out.join("summary.json"), &summary)?;

    Ok(if all_converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("warning: at least one step did not converge within k_max");
        ExitCode::from(2)
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Serialize)]
struct DiagReport {
    schema_version: u32,
    network: NetworkInfo,
    n_loops: usize,
    n_tree_edges: usize,
    n_chord_edges: usize,
    e2_size: usize,
    cond_ztz_estimate: f64,
    nnz_ratio_percent: f64,
    loop_fraction_percent: f64,
}

pub fn diag_command(args: &DiagArgs) -> anyhow::Result<ExitCode> {
    let net = load_network(&args.network)?;
    std::fs::create_dir_all(&args.out)?;
    let (a12, a10) = net.incidence();
    let basis = build_fundamental_basis(&a12, &a10)?;
    let diag = diagnostics(&basis, &a12)?;
    let reportd = DiagReport {
        schema_version: report::SCHEMA_VERSION,
        network: NetworkInfo::new(&args.network, &net),
        n_loops: basis.n_loops(),
        n_tree_edges: basis.tree_edges().len(),
        n_chord_edges: basis.chord_edges().len(),
        e2_size: basis.e2().len(),
        cond_ztz_estimate: diag.cond_ztz_estimate,
        nnz_ratio_percent: diag.nnz_ratio_percent,
        loop_fraction_percent: diag.loop_fraction_percent,
    };
    report::write_json(&args.out.join("diagnostics.json"), &reportd)?;
    if args.dump_z {
        let mut buf = Vec::new();
        write_matrix_market(&basis.to_sparse(), &mut buf)?;
        std::fs::write(args.out.join("z.mtx"), buf)?;
    }
    Ok(ExitCode::SUCCESS)
}
