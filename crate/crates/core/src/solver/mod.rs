//! Newton solvers for the steady-state hydraulic equations
//!
//! ```text
//! G(q)·q + A12·h + A10·h0 = 0      (energy conservation per pipe)
//! A12ᵀ·q − d = 0                   (flow continuity per junction)
//! ```
//!
//! Four methods share this module:
//!
//! * [`Method::Gga`] eliminates the flows by a Schur complement and iterates
//!   on the nodal heads (one sparse SPD solve of size `n_n` per iteration).
//! * [`Method::Nsm1`] iterates on loop flows `v` with `q = x* + Z·v`, where
//!   `Z` spans the null space of `A12ᵀ`; every iterate satisfies continuity
//!   exactly and the linear system has size `n_l = n_p − n_n`.
//! * [`Method::Nsm2`] adds partial headloss updates: only pipes whose flow
//!   step exceeds `ε·δ_N` are re-evaluated, making the iteration an inexact
//!   Newton method.
//! * [`Method::Nsm3`] additionally delays head solves (and the residual
//!   computed from them) until the update set has collapsed below
//!   `⌈a·|E2|⌉` or the relative flow change drops below `δ_N`; termination
//!   still requires the true residual to meet `δ_N`.

mod gga;
mod nsm;

pub use gga::{solve_gga, solve_gga_with, GgaWorkspace};
pub use nsm::solve_nsm;

use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::headloss::ResistanceModel;
use crate::net::Network;
use crate::nullbasis::{build_fundamental_basis, NullBasis};
use crate::sparse::{
    fill_reducing_order, numeric_cholesky, symbolic_cholesky, vec_norm_inf, GramAssembler,
    NumericFactor, SparseMatrix, SymbolicFactor,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gga,
    Nsm1,
    Nsm2,
    Nsm3,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gga, Method::Nsm1, Method::Nsm2, Method::Nsm3];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gga => "gga",
            Method::Nsm1 => "nsm1",
            Method::Nsm2 => "nsm2",
            Method::Nsm3 => "nsm3",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gga" | "schur" => Ok(Method::Gga),
            "nsm1" => Ok(Method::Nsm1),
            "nsm2" => Ok(Method::Nsm2),
            "nsm3" => Ok(Method::Nsm3),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Solver tolerances and switches. Defaults follow the values that work well
/// across network scales: `δ_N = 1e−6`, `ε = 1e−3`, `k_max = 100`,
/// `κ̄ = 1e8`, head-delay fraction `a = 0.5` and a GGA flow floor of
/// `1e−6 m³/s`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Residual tolerance on `‖f(q, h)‖_∞`.
    pub delta_n: f64,
    /// Update-set parameter; a pipe is re-evaluated when its flow step is at
    /// least `epsilon·delta_n`.
    pub epsilon: f64,
    pub k_max: usize,
    /// Upper bound on the condition number of the regularized diagonal.
    pub kappa_bar: f64,
    /// Fraction `a` of `|E2|` below which delayed head computations start.
    pub head_delay_fraction: f64,
    /// Minimum |flow| used when the Schur method inverts the diagonal.
    pub gga_flow_floor: f64,
    /// When false, the symbolic factorization is redone for every numeric
    /// factorization (ablation switch; results are identical).
    pub reuse_symbolic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Nsm2,
            delta_n: 1e-6,
            epsilon: 1e-3,
            k_max: 100,
            kappa_bar: 1e8,
            head_delay_fraction: 0.5,
            gga_flow_floor: 1e-6,
            reuse_symbolic: true,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_n > 0.0) {
            return Err(Error::NonPositiveInput("delta_n must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::NonPositiveInput("epsilon must lie in (0, 1)"));
        }
        if !(self.kappa_bar > 1.0) {
            return Err(Error::NonPositiveInput("kappa_bar must exceed 1"));
        }
        if !(self.head_delay_fraction > 0.0 && self.head_delay_fraction <= 1.0) {
            return Err(Error::NonPositiveInput("head_delay_fraction must lie in (0, 1]"));
        }
        if !(self.gga_flow_floor > 0.0) {
            return Err(Error::NonPositiveInput("gga_flow_floor must be positive"));
        }
        Ok(())
    }
}

/// Wall-clock attribution of a solver run. `linear_solves` covers numeric
/// factorizations and triangular substitutions, `headloss` the `G`/`F`
/// evaluations, `matmat` matrix assembly (`ZᵀFZ`, Schur product), `other` is
/// the remainder. Timing is informational only; every numeric output is
/// independent of it.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BlockTiming {
    pub linear_solves_ms: f64,
    pub headloss_ms: f64,
    pub matmat_ms: f64,
    pub other_ms: f64,
    pub total_ms: f64,
}

/// Converged (or not) state plus per-iteration telemetry.
#[derive(Clone, Debug)]
pub struct SolverResult {
    pub method: Method,
    /// Flows in m³/s, one per pipe, in reference direction.
    pub q: Vec<f64>,
    /// Heads in m, one per junction.
    pub h: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖f‖_∞` at the initial guess and after each iteration that evaluated
    /// it (NSM3 skips the delayed phase).
    pub residual_history: Vec<f64>,
    /// `|U^k|` per iteration: the number of loop pipes whose headloss was
    /// re-evaluated (for GGA, all pipes plus any floored re-evaluations).
    pub update_set_sizes: Vec<usize>,
    /// Worst continuity violation `‖A12ᵀq − d‖_∞` over all iterates.
    pub max_continuity_residual: f64,
    /// Total number of per-pipe headloss evaluations, including the initial
    /// full evaluation and (for NSM) the one-time refresh of non-loop pipes.
    pub headloss_evals: u64,
    /// Number of head-system solves (the `A12ᵀA12` or Schur system).
    pub head_solves: u64,
    pub numeric_factorizations: u64,
    /// Flow-update steps actually applied (equals `iterations` except on
    /// tree networks, which assign flows once without iterating).
    pub flow_updates: u64,
    pub timing: BlockTiming,
}

pub(crate) struct Timers {
    pub linear: Duration,
    pub headloss: Duration,
    pub matmat: Duration,
    start: Instant,
}

impl Timers {
    pub fn new() -> Self {
        Self {
            linear: Duration::ZERO,
            headloss: Duration::ZERO,
            matmat: Duration::ZERO,
            start: Instant::now(),
        }
    }

    pub fn time<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        *slot += t0.elapsed();
        out
    }

    pub fn finish(&self) -> BlockTiming {
        let total = self.start.elapsed();
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        BlockTiming {
            linear_solves_ms: ms(self.linear),
            headloss_ms: ms(self.headloss),
            matmat_ms: ms(self.matmat),
            other_ms: ms(total.saturating_sub(self.linear + self.headloss + self.matmat)),
            total_ms: ms(total),
        }
    }
}

/// Everything that depends on the network alone and is reused across demand
/// steps of an extended simulation: the null basis, the factorized head
/// system `A12ᵀA12`, and the symbolic factorization of the loop system.
pub struct Precomputed {
    pub(crate) basis: NullBasis,
    pub(crate) ztfz: GramAssembler,
    pub(crate) ztfz_symbolic: Arc<SymbolicFactor>,
    pub(crate) head_factor: NumericFactor,
    pub(crate) a12: SparseMatrix,
    pub(crate) a10: SparseMatrix,
    pub(crate) model: ResistanceModel,
    pub(crate) fingerprint: u64,
}

impl Precomputed {
    pub fn basis(&self) -> &NullBasis {
        &self.basis
    }

    pub fn a12(&self) -> &SparseMatrix {
        &self.a12
    }

    pub fn a10(&self) -> &SparseMatrix {
        &self.a10
    }

    pub fn model(&self) -> &ResistanceModel {
        &self.model
    }

    /// Assembler for `ZᵀFZ` over the fixed full-`E2` pattern.
    pub fn ztfz_assembler(&self) -> &GramAssembler {
        &self.ztfz
    }

    pub fn ztfz_symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.ztfz_symbolic
    }
}

/// Builds the per-network constants: null basis `Z`, Cholesky factor of
/// `A12ᵀA12`, and the symbolic factorization for the loop matrices.
pub fn precompute(net: &Network) -> Result<Precomputed> {
    let (a12, a10) = net.incidence();
    let basis = build_fundamental_basis(&a12, &a10)?;

    let z_rows: Vec<Vec<(usize, f64)>> = basis
        .row_view()
        .into_iter()
        .map(|r| r.into_iter().map(|(c, s)| (c, f64::from(s))).collect())
        .collect();
    let ztfz = GramAssembler::new(basis.n_loops(), &z_rows);
    let ztz = ztfz.assemble(&vec![1.0; net.n_pipes()])?;
    let perm = fill_reducing_order(&ztz);
    let ztfz_symbolic = Arc::new(symbolic_cholesky(&ztz, &perm)?);

    let head_gram = GramAssembler::new(net.n_junctions(), &a12.to_row_lists());
    let head_matrix = head_gram.assemble(&vec![1.0; net.n_pipes()])?;
    let head_perm = fill_reducing_order(&head_matrix);
    let head_symbolic = Arc::new(symbolic_cholesky(&head_matrix, &head_perm)?);
    let head_factor = numeric_cholesky(&head_matrix, &head_symbolic)?;

    Ok(Precomputed {
        basis,
        ztfz,
        ztfz_symbolic,
        head_factor,
        a12,
        a10,
        model: ResistanceModel::from_network(net)?,
        fingerprint: net.fingerprint(),
    })
}

/// Solves `A12ᵀ·x* = d` through the factorized normal system:
/// `A12ᵀA12·w = d`, then `x* = A12·w`.
pub fn particular_solution(pre: &Precomputed, d: &[f64]) -> Result<Vec<f64>> {
    if d.len() != pre.a12.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} demands for {} junctions",
            d.len(),
            pre.a12.ncols()
        )));
    }
    let w = pre.head_factor.solve(d)?;
    Ok(pre.a12.matvec(&w))
}

/// The update set `U^k(ε, δ_N)`: loop pipes whose flow step reaches
/// `ε·δ_N` (inclusive).
pub fn update_set(
    q_next: &[f64],
    q_prev: &[f64],
    epsilon: f64,
    delta_n: f64,
    e2: &[usize],
) -> Vec<usize> {
    assert_eq!(q_next.len(), q_prev.len());
    let threshold = epsilon * delta_n;
    e2.iter()
        .copied()
        .filter(|&i| (q_next[i] - q_prev[i]).abs() >= threshold)
        .collect()
}

/// `‖f(q, h)‖_∞` with a caller-supplied (unregularized) `G` diagonal:
/// the worse of the energy and continuity residuals.
pub fn residual_norm(
    a12: &SparseMatrix,
    a10_h0: &[f64],
    d: &[f64],
    q: &[f64],
    h: &[f64],
    g_diag: &[f64],
) -> f64 {
    let a12_h = a12.matvec(h);
    let mut worst = 0.0f64;
    for j in 0..q.len() {
        worst = worst.max((g_diag[j] * q[j] + a12_h[j] + a10_h0[j]).abs());
    }
    let cont = a12.matvec_t(q);
    for i in 0..d.len() {
        worst = worst.max((cont[i] - d[i]).abs());
    }
    worst
}

/// Residual of a state against a network, evaluating `G` fresh from `q`.
pub fn residual_norm_for(net: &Network, d: &[f64], q: &[f64], h: &[f64]) -> Result<f64> {
    let model = ResistanceModel::from_network(net)?;
    let (a12, a10) = net.incidence();
    let a10_h0 = a10.matvec(&net.fixed_head_values());
    let g: Vec<f64> = (0..net.n_pipes()).map(|j| model.g_coeff(j, q[j])).collect();
    Ok(residual_norm(&a12, &a10_h0, d, q, h, &g))
}

/// Continuity violation `‖A12ᵀq − d‖_∞`.
pub(crate) fn continuity_residual(a12: &SparseMatrix, d: &[f64], q: &[f64]) -> f64 {
    let cont = a12.matvec_t(q);
    vec_norm_inf(&cont.iter().zip(d).map(|(a, b)| a - b).collect::<Vec<_>>())
}

/// Initial flow guess: one foot per second in every pipe's reference
/// direction, which keeps all flows away from zero.
pub fn initial_flows(net: &Network) -> Vec<f64> {
    net.pipes()
        .iter()
        .map(|p| std::f64::consts::FRAC_PI_4 * p.diameter * p.diameter * 0.3048)
        .collect()
}

/// Initial head guess: the largest fixed head, everywhere.
pub fn initial_heads(net: &Network) -> Vec<f64> {
    let h = net
        .fixed_head_values()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    vec![h; net.n_junctions()]
}

/// One-call entry point: builds the per-network state and dispatches on the
/// configured method. For extended simulations build [`Precomputed`] or
/// [`GgaWorkspace`] once and call the `_with` variants instead.
pub fn solve(net: &Network, d: &[f64], cfg: &SolverConfig) -> Result<SolverResult> {
    match cfg.method {
        Method::Gga => solve_gga(net, d, cfg),
        _ => {
            let pre = precompute(net)?;
            solve_nsm(net, d, cfg, &pre)
        }
    }
}
