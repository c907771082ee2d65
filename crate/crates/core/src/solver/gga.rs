//! Schur-complement (global gradient) iteration on nodal heads.
//!
//! Each Newton step eliminates the flow block through the diagonal
//! `F̂ = N·G(q̂) + T`, solves
//!
//! ```text
//! A12ᵀ·F̂⁻¹·A12 · h⁺ = A12ᵀ[q − F̂⁻¹·(G·q + A10·h0)] − d
//! ```
//!
//! for the heads and back-substitutes
//!
//! ```text
//! q⁺ = q − F̂⁻¹·(G·q + A12·h⁺ + A10·h0),
//! ```
//!
//! which keeps `A12ᵀ·q⁺ = d` by construction. The elimination requires an
//! invertible diagonal, so the flows feeding `F̂` are floored in magnitude
//! (Hazen-Williams headloss coefficients vanish at zero flow) and the
//! diagonal is shifted to cap its condition number. Both touch only the
//! Jacobian: `G` and the residual always use the true coefficients at the
//! unfloored iterate, so fixed points are unbiased and the step reduces to
//! the textbook head/flow update whenever no pipe sits below the floor.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::headloss::{regularization_shift, HeadlossState, ResistanceModel, UpdateSubset};
use crate::net::Network;
use crate::sparse::{
    fill_reducing_order, numeric_cholesky, symbolic_cholesky, GramAssembler, SparseMatrix,
    SymbolicFactor,
};

use super::{
    continuity_residual, initial_flows, initial_heads, residual_norm, Method, SolverConfig,
    SolverResult, Timers,
};

/// Per-network state of the Schur method, reusable across demand steps: the
/// assembler for `A12ᵀ·diag(w)·A12` (pattern fixed by the topology) and one
/// symbolic factorization shared by every iteration and time step.
pub struct GgaWorkspace {
    schur: GramAssembler,
    symbolic: Arc<SymbolicFactor>,
    a12: SparseMatrix,
    a10: SparseMatrix,
    model: ResistanceModel,
    fingerprint: u64,
}

impl GgaWorkspace {
    pub fn new(net: &Network) -> Result<Self> {
        let (a12, a10) = net.incidence();
        let schur = GramAssembler::new(net.n_junctions(), &a12.to_row_lists());
        let pattern = schur.assemble(&vec![1.0; net.n_pipes()])?;
        let perm = fill_reducing_order(&pattern);
        let symbolic = Arc::new(symbolic_cholesky(&pattern, &perm)?);
        Ok(Self {
            schur,
            symbolic,
            a12,
            a10,
            model: ResistanceModel::from_network(net)?,
            fingerprint: net.fingerprint(),
        })
    }
}

pub fn solve_gga(net: &Network, d: &[f64], cfg: &SolverConfig) -> Result<SolverResult> {
    let ws = GgaWorkspace::new(net)?;
    solve_gga_with(&ws, net, d, cfg)
}

pub fn solve_gga_with(
    ws: &GgaWorkspace,
    net: &Network,
    d: &[f64],
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    if ws.fingerprint != net.fingerprint() {
        return Err(Error::PrecomputeMismatch);
    }
    let n_p = net.n_pipes();
    let n_n = net.n_junctions();
    if d.len() != n_n {
        return Err(Error::DimensionMismatch(format!(
            "{} demands for {n_n} junctions",
            d.len()
        )));
    }

    let mut timers = Timers::new();
    let model = &ws.model;
    let exps = model.exponents();
    let a10_h0 = ws.a10.matvec(&net.fixed_head_values());

    let mut q = initial_flows(net);
    let mut h = initial_heads(net);
    let mut headloss_evals = 0u64;
    let mut head_solves = 0u64;
    let mut numeric_factorizations = 0u64;
    let mut update_set_sizes = Vec::new();
    let mut residual_history = Vec::new();

    let mut st = Timers::time(&mut timers.headloss, || HeadlossState::new(model, &q));
    headloss_evals += n_p as u64;

    let mut max_cont = 0.0f64;
    let mut residual = residual_norm(&ws.a12, &a10_h0, d, &q, &h, st.g());
    residual_history.push(residual);
    let mut converged = residual <= cfg.delta_n;
    let mut iterations = 0usize;

    while !converged && iterations < cfg.k_max {
        // Jacobian diagonal from floored flows; the headloss coefficients of
        // floored pipes are re-evaluated at the floor value.
        let mut f_hat = st.f().to_vec();
        let mut floored = 0usize;
        Timers::time(&mut timers.headloss, || {
            for j in 0..n_p {
                if q[j].abs() < cfg.gga_flow_floor {
                    let qf = if q[j] < 0.0 {
                        -cfg.gga_flow_floor
                    } else {
                        cfg.gga_flow_floor
                    };
                    f_hat[j] = exps[j] * model.g_coeff(j, qf);
                    floored += 1;
                }
            }
        });
        headloss_evals += floored as u64;

        let shift = regularization_shift(&f_hat, cfg.kappa_bar)?;
        let weights: Vec<f64> = f_hat
            .iter()
            .zip(&shift)
            .map(|(f, t)| 1.0 / (f + t))
            .collect();

        let s_mat = Timers::time(&mut timers.matmat, || ws.schur.assemble(&weights))?;
        let factor = Timers::time(&mut timers.linear, || -> Result<_> {
            let fac = if cfg.reuse_symbolic {
                numeric_cholesky(&s_mat, &ws.symbolic)?
            } else {
                let perm = fill_reducing_order(&s_mat);
                let sym = Arc::new(symbolic_cholesky(&s_mat, &perm)?);
                numeric_cholesky(&s_mat, &sym)?
            };
            Ok(fac)
        })?;
        numeric_factorizations += 1;

        // y = q − F̂⁻¹(G q + A10 h0); rhs = A12ᵀ y − d.
        let g = st.g();
        let y: Vec<f64> = (0..n_p)
            .map(|j| q[j] - weights[j] * (g[j] * q[j] + a10_h0[j]))
            .collect();
        let mut rhs = ws.a12.matvec_t(&y);
        for i in 0..n_n {
            rhs[i] -= d[i];
        }
        h = Timers::time(&mut timers.linear, || factor.solve(&rhs))?;
        head_solves += 1;

        let a12_h = ws.a12.matvec(&h);
        for j in 0..n_p {
            q[j] = y[j] - weights[j] * a12_h[j];
        }

        Timers::time(&mut timers.headloss, || {
            st.update(model, &q, UpdateSubset::All)
        })?;
        headloss_evals += n_p as u64;
        update_set_sizes.push(n_p + floored);

        iterations += 1;
        max_cont = max_cont.max(continuity_residual(&ws.a12, d, &q));
        residual = residual_norm(&ws.a12, &a10_h0, d, &q, &h, st.g());
        residual_history.push(residual);
        converged = residual <= cfg.delta_n;
    }

    Ok(SolverResult {
        method: Method::Gga,
        q,
        h,
        iterations,
        converged,
        residual_history,
        update_set_sizes,
        max_continuity_residual: max_cont,
        headloss_evals,
        head_solves,
        numeric_factorizations,
        flow_updates: iterations as u64,
        timing: timers.finish(),
    })
}
