//! Shared test oracles: dense linear algebra and a brute-force dense Newton
//! solver for the hydraulic equations. Everything here is deliberately
//! independent of the crate's sparse kernel and solver paths: dense storage,
//! partial-pivot LU, and headloss formulas written out from the pipe data.

#![allow(dead_code)]

use hydronet::net::{HeadlossModel, Network, NodeRef};

pub const ORACLE_TOL: f64 = 1e-12;

/// Dense LU solve with partial pivoting; returns None on (numerical)
/// singularity.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if m[i][k].abs() > m[piv][k].abs() {
                piv = i;
            }
        }
        if m[piv][k].abs() < 1e-300 {
            return None;
        }
        m.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let factor = m[i][k] / m[k][k];
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= factor * m[k][j];
            }
            x[i] -= factor * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

/// Dense Cholesky factor (lower), or None if a pivot fails.
pub fn dense_cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 0.0 {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / l[j][j];
        }
    }
    Some(l)
}

/// nnz(L) of the Cholesky factor of a symmetric pattern under a permutation,
/// by direct boolean elimination on a dense matrix.
pub fn dense_fill_count(n: usize, entries: &[(usize, usize)], perm: &[usize]) -> usize {
    let mut iperm = vec![0usize; n];
    for (k, &old) in perm.iter().enumerate() {
        iperm[old] = k;
    }
    let mut m = vec![vec![false; n]; n];
    for k in 0..n {
        m[k][k] = true;
    }
    for &(i, j) in entries {
        let (pi, pj) = (iperm[i], iperm[j]);
        m[pi][pj] = true;
        m[pj][pi] = true;
    }
    let mut nnz = 0;
    for k in 0..n {
        let lower: Vec<usize> = (k..n).filter(|&i| m[i][k]).collect();
        nnz += lower.len();
        for &i in &lower {
            for &j in &lower {
                m[i][j] = true;
            }
        }
    }
    nnz
}

/// Oracle headloss coefficient G(q) recomputed from the pipe fields alone.
pub fn oracle_g(net: &Network, j: usize, q: f64) -> f64 {
    let p = &net.pipes()[j];
    match p.model {
        HeadlossModel::HazenWilliams => {
            let r = 10.670 * p.length / (p.roughness.powf(1.852) * p.diameter.powf(4.871));
            r * q.abs().powf(0.852)
        }
        HeadlossModel::DarcyWeisbach => {
            let nu = 1.004e-6;
            let re = 4.0 * q.abs() / (std::f64::consts::PI * p.diameter * nu);
            if re < 2000.0 {
                128.0 * p.length * nu / (std::f64::consts::PI * 9.81 * p.diameter.powi(4))
            } else {
                let f = if re > 4000.0 {
                    swamee_jain(re, p.roughness / p.diameter)
                } else {
                    hermite_blend(re, p.roughness / p.diameter)
                };
                f * 8.0 * p.length / (std::f64::consts::PI.powi(2) * 9.81 * p.diameter.powi(5)) * q.abs()
            }
        }
    }
}

fn swamee_jain(re: f64, rel: f64) -> f64 {
    0.25 / (rel / 3.7 + 5.74 / re.powf(0.9)).log10().powi(2)
}

fn hermite_blend(re: f64, rel: f64) -> f64 {
    let f0 = 64.0 / 2000.0;
    let m0 = -64.0 / (2000.0 * 2000.0);
    let f1 = swamee_jain(4000.0, rel);
    let arg = rel / 3.7 + 5.74 / 4000.0f64.powf(0.9);
    let m1 = -0.5 / arg.log10().powi(3) * (-0.9 * 5.74 * 4000.0f64.powf(-1.9))
        / (arg * std::f64::consts::LN_10);
    let t = (re - 2000.0) / 2000.0;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * 2000.0 * m0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * 2000.0 * m1
}

fn signed_entries(net: &Network, j: usize) -> Vec<(NodeRef, f64)> {
    let p = &net.pipes()[j];
    vec![(p.to, 1.0), (p.from, -1.0)]
}

/// Brute-force Newton on the full (n_p + n_n) saddle system with a dense
/// Jacobian, iterated to `tol`. Starts from the same velocity-based guess as
/// the library so both land on the unique solution's basin directly.
pub fn dense_newton(net: &Network, d: &[f64], tol: f64, k_max: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let n_p = net.n_pipes();
    let n_n = net.n_junctions();
    let h0 = net.fixed_head_values();
    let mut q: Vec<f64> = net
        .pipes()
        .iter()
        .map(|p| std::f64::consts::FRAC_PI_4 * p.diameter * p.diameter * 0.3048)
        .collect();
    let mut h = vec![h0.iter().cloned().fold(f64::NEG_INFINITY, f64::max); n_n];

    let exponent = |j: usize| match net.pipes()[j].model {
        HeadlossModel::HazenWilliams => 1.852,
        HeadlossModel::DarcyWeisbach => 2.0,
    };

    for _ in 0..k_max {
        // Residual f(q, h).
        let mut f = vec![0.0; n_p + n_n];
        for j in 0..n_p {
            let mut energy = oracle_g(net, j, q[j]) * q[j];
            for (node, sign) in signed_entries(net, j) {
                match node {
                    NodeRef::Junction(i) => energy += sign * h[i],
                    NodeRef::Fixed(i) => energy += sign * h0[i],
                }
            }
            f[j] = energy;
        }
        for (i, &di) in d.iter().enumerate() {
            f[n_p + i] = -di;
        }
        for j in 0..n_p {
            for (node, sign) in signed_entries(net, j) {
                if let NodeRef::Junction(i) = node {
                    f[n_p + i] += sign * q[j];
                }
            }
        }
        let worst = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if worst <= tol {
            return Some((q, h));
        }

        // Dense Jacobian [[N·G, A12], [A12ᵀ, 0]] with a tiny flow floor so
        // Hazen-Williams rows never go exactly singular.
        let n = n_p + n_n;
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n_p {
            let qj = q[j].abs().max(1e-12);
            jac[j][j] = exponent(j) * oracle_g(net, j, qj);
            for (node, sign) in signed_entries(net, j) {
                if let NodeRef::Junction(i) = node {
                    jac[j][n_p + i] = sign;
                    jac[n_p + i][j] = sign;
                }
            }
        }
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let step = dense_solve(&jac, &rhs)?;
        for j in 0..n_p {
            q[j] += step[j];
        }
        for i in 0..n_n {
            h[i] += step[n_p + i];
        }
    }
    None
}

/// Unique tree flows by leaf stripping: each leaf junction's single pipe
/// carries exactly its residual demand.
pub fn leaf_strip_flows(net: &Network, d: &[f64]) -> Option<Vec<f64>> {
    let n_p = net.n_pipes();
    let n_n = net.n_junctions();
    if n_p != n_n {
        return None; // not a tree with one fixed component
    }
    let mut remaining_demand = d.to_vec();
    let mut degree = vec![0usize; n_n];
    let mut alive = vec![true; n_p];
    let mut q = vec![0.0; n_p];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n_n];
    for j in 0..n_p {
        for (node, _) in signed_entries(net, j) {
            if let NodeRef::Junction(i) = node {
                degree[i] += 1;
                incident[i].push(j);
            }
        }
    }
    let mut queue: Vec<usize> = (0..n_n).filter(|&i| degree[i] == 1).collect();
    let mut resolved = 0;
    while let Some(i) = queue.pop() {
        let &j = incident[i].iter().find(|&&j| alive[j])?;
        // Flow into junction i must equal its remaining demand; the sign of
        // the incidence entry orients it.
        let sign = if net.pipes()[j].to == NodeRef::Junction(i) {
            1.0
        } else {
            -1.0
        };
        q[j] = sign * remaining_demand[i];
        alive[j] = false;
        resolved += 1;
        // The other endpoint inherits the flow as extra demand.
        for (node, osign) in signed_entries(net, j) {
            if let NodeRef::Junction(other) = node {
                if other != i {
                    remaining_demand[other] += osign * q[j] * -1.0;
                    degree[other] -= 1;
                    if degree[other] == 1 {
                        queue.push(other);
                    }
                }
            }
        }
        degree[i] = 0;
    }
    (resolved == n_n).then_some(q)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
