//! Null-space Newton iteration on loop flows, in three variants.
//!
//! With `q = x* + Z·v` every iterate satisfies continuity exactly, and the
//! Newton step reduces to the SPD loop system
//!
//! ```text
//! ZᵀF̃Z · v = Zᵀ[(F̃ − G)·q − A10·h0 − F̃·x*]
//! ```
//!
//! followed by the head solve
//!
//! ```text
//! A12ᵀA12 · h⁺ = A12ᵀ[(F̃ − G)·q − A10·h0 − F̃·q⁺]
//! ```
//!
//! against the factor computed once per network. `F̃ = F + T` is the
//! regularized Newton diagonal; residuals use the raw `G`.
//!
//! NSM1 reassembles `ZᵀF̃Z` from scratch every iteration. NSM2 re-evaluates
//! headlosses only on the update set `U^k` and patches the loop matrix with
//! the diagonal deltas that actually changed, which keeps the incremental
//! and full assembly paths numerically equal. NSM3 additionally skips the
//! head solve and residual during the early iterations, monitoring `|U^k|`
//! and `‖Δq‖₁/‖q‖₁` instead; heads start once the heuristic fires and
//! convergence is declared only on the true residual.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::headloss::{HeadlossState, UpdateSubset};
use crate::net::Network;
use crate::sparse::{fill_reducing_order, numeric_cholesky, symbolic_cholesky};

use super::{
    continuity_residual, initial_flows, initial_heads, particular_solution, residual_norm,
    update_set, Method, Precomputed, SolverConfig, SolverResult, Timers,
};

pub fn solve_nsm(
    net: &Network,
    d: &[f64],
    cfg: &SolverConfig,
    pre: &Precomputed,
) -> Result<SolverResult> {
    cfg.validate()?;
    if cfg.method == Method::Gga {
        return Err(Error::InvalidNetwork(
            "solve_nsm drives the null-space variants; use solve_gga for the Schur method".into(),
        ));
    }
    if pre.fingerprint != net.fingerprint() {
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
    let model = &pre.model;
    let basis = &pre.basis;
    let e2 = basis.e2();
    let n_l = basis.n_loops();
    let a10_h0 = pre.a10.matvec(&net.fixed_head_values());

    let mut q = initial_flows(net);
    let mut h = initial_heads(net);
    let mut headloss_evals = 0u64;
    let mut head_solves = 0u64;
    let mut numeric_factorizations = 0u64;
    let mut flow_updates = 0u64;
    let mut update_set_sizes: Vec<usize> = Vec::new();
    let mut residual_history = Vec::new();
    let mut max_cont = 0.0f64;

    let mut st = Timers::time(&mut timers.headloss, || HeadlossState::new(model, &q));
    headloss_evals += n_p as u64;

    let x_star = Timers::time(&mut timers.linear, || particular_solution(pre, d))?;

    if n_l == 0 {
        // Tree network: flows are fully determined by continuity. One head
        // solve closes the energy equations exactly (A12 is square here).
        q = x_star;
        flow_updates = 1;
        Timers::time(&mut timers.headloss, || {
            st.update(model, &q, UpdateSubset::All)
        })?;
        headloss_evals += n_p as u64;
        let w: Vec<f64> = (0..n_p).map(|j| -st.g()[j] * q[j] - a10_h0[j]).collect();
        let rhs = pre.a12.matvec_t(&w);
        h = Timers::time(&mut timers.linear, || pre.head_factor.solve(&rhs))?;
        head_solves += 1;
        max_cont = continuity_residual(&pre.a12, d, &q);
        let residual = residual_norm(&pre.a12, &a10_h0, d, &q, &h, st.g());
        residual_history.push(residual);
        return Ok(SolverResult {
            method: cfg.method,
            q,
            h,
            iterations: 0,
            converged: residual <= cfg.delta_n,
            residual_history,
            update_set_sizes,
            max_continuity_residual: max_cont,
            headloss_evals,
            head_solves,
            numeric_factorizations,
            flow_updates,
            timing: timers.finish(),
        });
    }

    // NSM3 starts in the delayed phase: no head solves, no residuals.
    let mut heads_phase = cfg.method != Method::Nsm3;
    let mut converged = false;
    let mut iterations = 0usize;
    if heads_phase {
        let residual = residual_norm(&pre.a12, &a10_h0, d, &q, &h, st.g());
        residual_history.push(residual);
        if residual <= cfg.delta_n {
            converged = true;
        }
    }
    let head_start_size = (cfg.head_delay_fraction * e2.len() as f64).ceil() as usize;

    // Loop matrix and the regularized diagonal it was assembled from.
    let mut x_mat = None;
    let mut f_reg_prev: Vec<f64> = Vec::new();

    while !converged && iterations < cfg.k_max {
        st.regularize(cfg.kappa_bar)?;
        let f_reg = st.f_reg().to_vec();
        let g = st.g();

        // X^k = Zᵀ·diag(F̃)·Z, full or patched with the entries that moved.
        match x_mat.as_mut() {
            Some(mat) if cfg.method != Method::Nsm1 => {
                let delta: Vec<usize> = e2
                    .iter()
                    .copied()
                    .filter(|&i| f_reg[i] != f_reg_prev[i])
                    .collect();
                Timers::time(&mut timers.matmat, || {
                    pre.ztfz.update_into(mat, &f_reg, &f_reg_prev, &delta)
                })?;
            }
            _ => {
                let built = Timers::time(&mut timers.matmat, || pre.ztfz.assemble(&f_reg))?;
                x_mat = Some(built);
            }
        }
        f_reg_prev = f_reg.clone();
        let x_ref = x_mat.as_ref().unwrap();

        // b^k = Zᵀ[(F̃ − G)q − A10 h0 − F̃ x*]
        let w: Vec<f64> = (0..n_p)
            .map(|j| (f_reg[j] - g[j]) * q[j] - a10_h0[j] - f_reg[j] * x_star[j])
            .collect();
        let b = basis.apply_t(&w);

        let factor = Timers::time(&mut timers.linear, || -> Result<_> {
            let fac = if cfg.reuse_symbolic {
                numeric_cholesky(x_ref, &pre.ztfz_symbolic)
            } else {
                let perm = fill_reducing_order(x_ref);
                let sym = Arc::new(symbolic_cholesky(x_ref, &perm)?);
                numeric_cholesky(x_ref, &sym)
            };
            fac.map_err(|e| match e {
                Error::NotPositiveDefinite { .. } => Error::AllZeroLoop,
                other => other,
            })
        })?;
        numeric_factorizations += 1;
        let v = Timers::time(&mut timers.linear, || factor.solve(&b))?;

        let mut q_next = basis.apply(&v);
        for j in 0..n_p {
            q_next[j] += x_star[j];
        }

        // Update set: full E2 on the first flow update so the incremental
        // recursion has a sound base, the thresholded set afterwards.
        let first_update = iterations == 0;
        let u: Vec<usize> = if first_update || cfg.method == Method::Nsm1 {
            e2.to_vec()
        } else {
            update_set(&q_next, &q, cfg.epsilon, cfg.delta_n, e2)
        };
        update_set_sizes.push(u.len());

        // Delayed-head heuristic, checked on the current step.
        if !heads_phase {
            let dq1: f64 = q_next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
            let q1: f64 = q_next.iter().map(|x| x.abs()).sum();
            if u.len() < head_start_size || dq1 <= cfg.delta_n * q1 {
                heads_phase = true;
            }
        }

        // Head right-hand side uses the matrices the Newton step was built
        // from, so it is formed before the headloss update.
        let head_rhs = if heads_phase {
            let w2: Vec<f64> = (0..n_p)
                .map(|j| (f_reg[j] - g[j]) * q[j] - a10_h0[j] - f_reg[j] * q_next[j])
                .collect();
            Some(pre.a12.matvec_t(&w2))
        } else {
            None
        };

        // Apply the partial (or first full) headloss update at the new flows.
        Timers::time(&mut timers.headloss, || {
            if first_update {
                st.update(model, &q_next, UpdateSubset::All)
            } else {
                st.update(model, &q_next, UpdateSubset::Indices(&u))
            }
        })?;
        headloss_evals += if first_update { n_p as u64 } else { u.len() as u64 };

        q = q_next;
        flow_updates += 1;
        iterations += 1;
        max_cont = max_cont.max(continuity_residual(&pre.a12, d, &q));

        if let Some(rhs) = head_rhs {
            h = Timers::time(&mut timers.linear, || pre.head_factor.solve(&rhs))?;
            head_solves += 1;
            let residual = residual_norm(&pre.a12, &a10_h0, d, &q, &h, st.g());
            residual_history.push(residual);
            if residual <= cfg.delta_n {
                converged = true;
            }
        }
    }

    // A run that exhausted k_max inside the delayed phase still reports an
    // honest head state and residual.
    if !converged && cfg.method == Method::Nsm3 && head_solves == 0 {
        let w2: Vec<f64> = (0..n_p).map(|j| -st.g()[j] * q[j] - a10_h0[j]).collect();
        let rhs = pre.a12.matvec_t(&w2);
        h = Timers::time(&mut timers.linear, || pre.head_factor.solve(&rhs))?;
        head_solves += 1;
        let residual = residual_norm(&pre.a12, &a10_h0, d, &q, &h, st.g());
        residual_history.push(residual);
        converged = residual <= cfg.delta_n;
    }

    Ok(SolverResult {
        method: cfg.method,
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
        flow_updates,
        timing: timers.finish(),
    })
}
