//! Sparse fundamental null basis of the continuity matrix `A12ᵀ`.
//!
//! The construction pivots on incidence rows with a single unresolved
//! junction entry, which grows a spanning forest rooted at the fixed-head
//! nodes. The pivoted pipes are the tree edges; every remaining pipe is a
//! chord whose fundamental cycle (through the tree, with all fixed-head nodes
//! identified) yields one column of `Z` with entries in {−1, 0, +1} and `+1`
//! on the chord. Columns therefore carry an identity sub-block over the
//! chords and `A12ᵀ·Z = 0` holds exactly in integer arithmetic.
//!
//! A pipe connecting two fixed-head nodes forms a one-pipe pseudo-loop: its
//! column is a bare chord entry, and the head difference it must absorb
//! enters through the fixed-head term of the energy equations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::{
    numeric_cholesky, symbolic_cholesky, vec_norm_inf, GramAssembler, SparseMatrix, Symmetry,
};

/// Pipe endpoint during basis construction; every fixed-head node collapses
/// into one virtual root so pseudo-loops through reservoirs close properly.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Pos {
    Junction(usize),
    Root,
}

#[derive(Clone, Debug)]
pub struct NullBasis {
    n_pipes: usize,
    /// One column per chord, sorted by pipe index; signs are exact.
    cols: Vec<Vec<(usize, i8)>>,
    e2: Vec<usize>,
    tree_edges: Vec<usize>,
    chord_edges: Vec<usize>,
    /// Row permutation used in construction: tree pipes in pivot order, then
    /// chords ascending.
    pipe_order: Vec<usize>,
    /// Column permutation: junctions in resolution order.
    node_order: Vec<usize>,
}

impl NullBasis {
    pub fn n_pipes(&self) -> usize {
        self.n_pipes
    }

    pub fn n_loops(&self) -> usize {
        self.cols.len()
    }

    /// Pipes participating in at least one fundamental cycle, sorted.
    pub fn e2(&self) -> &[usize] {
        &self.e2
    }

    pub fn tree_edges(&self) -> &[usize] {
        &self.tree_edges
    }

    pub fn chord_edges(&self) -> &[usize] {
        &self.chord_edges
    }

    pub fn pipe_order(&self) -> &[usize] {
        &self.pipe_order
    }

    pub fn node_order(&self) -> &[usize] {
        &self.node_order
    }

    /// Entries of column `c` as `(pipe, sign)`, ascending by pipe.
    pub fn column(&self, c: usize) -> &[(usize, i8)] {
        &self.cols[c]
    }

    /// Row-wise view of `Z`: for each pipe, the `(column, sign)` pairs.
    pub fn row_view(&self) -> Vec<Vec<(usize, i8)>> {
        let mut rows: Vec<Vec<(usize, i8)>> = vec![Vec::new(); self.n_pipes];
        for (c, col) in self.cols.iter().enumerate() {
            for &(pipe, sign) in col {
                rows[pipe].push((c, sign));
            }
        }
        rows
    }

    /// `q = Z·v`, scattering loop flows onto pipes.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_loops());
        let mut q = vec![0.0; self.n_pipes];
        for (c, col) in self.cols.iter().enumerate() {
            let vc = v[c];
            for &(pipe, sign) in col {
                q[pipe] += f64::from(sign) * vc;
            }
        }
        q
    }

    /// `Zᵀ·w`, accumulating a pipe vector around every cycle.
    pub fn apply_t(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n_pipes);
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(pipe, sign)| f64::from(sign) * w[pipe]).sum())
            .collect()
    }

    /// Promotes the basis to a real CSC matrix (n_p × n_l).
    pub fn to_sparse(&self) -> SparseMatrix {
        let mut trips = Vec::new();
        for (c, col) in self.cols.iter().enumerate() {
            for &(pipe, sign) in col {
                trips.push((pipe, c, f64::from(sign)));
            }
        }
        SparseMatrix::from_triplets(self.n_pipes, self.n_loops(), &trips, Symmetry::General)
            .expect("basis columns are valid triplets")
    }
}

/// Builds the fundamental null basis from the incidence matrices.
pub fn build_fundamental_basis(a12: &SparseMatrix, a10: &SparseMatrix) -> Result<NullBasis> {
    let n_pipes = a12.nrows();
    let n_junctions = a12.ncols();
    if a10.nrows() != n_pipes {
        return Err(Error::DimensionMismatch(
            "A12 and A10 must have one row per pipe".into(),
        ));
    }

    // Recover the oriented endpoints of every pipe: +1 marks the node the
    // pipe enters, −1 the node it leaves.
    let mut to: Vec<Option<Pos>> = vec![None; n_pipes];
    let mut from: Vec<Option<Pos>> = vec![None; n_pipes];
    let mut fill = |pipe: usize, pos: Pos, sign: f64| -> Result<()> {
        let slot = if sign > 0.0 { &mut to[pipe] } else { &mut from[pipe] };
        if slot.is_some() {
            return Err(Error::RankDeficient(format!(
                "pipe {pipe} has more than two incidence entries"
            )));
        }
        *slot = Some(pos);
        Ok(())
    };
    for i in 0..n_junctions {
        let (rows, vals) = a12.col(i);
        for (&j, &v) in rows.iter().zip(vals) {
            fill(j, Pos::Junction(i), v)?;
        }
    }
    for i in 0..a10.ncols() {
        let (rows, vals) = a10.col(i);
        for (&j, &v) in rows.iter().zip(vals) {
            fill(j, Pos::Root, v)?;
        }
    }
    let endpoints: Vec<(Pos, Pos)> = (0..n_pipes)
        .map(|j| {
            match (from[j], to[j]) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(Error::RankDeficient(format!(
                    "pipe {j} lacks a +1/−1 incidence pair"
                ))),
            }
        })
        .collect::<Result<_>>()?;

    // Junction adjacency and the count of unresolved junction endpoints per
    // pipe.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n_junctions];
    let mut unresolved_ends = vec![0usize; n_pipes];
    for (j, &(a, b)) in endpoints.iter().enumerate() {
        for p in [a, b] {
            if let Pos::Junction(i) = p {
                incident[i].push(j);
                unresolved_ends[j] += 1;
            }
        }
    }

    let mut resolved = vec![false; n_junctions];
    let mut parent_edge: Vec<usize> = vec![usize::MAX; n_junctions];
    let mut parent_pos: Vec<Pos> = vec![Pos::Root; n_junctions];
    let mut depth = vec![0usize; n_junctions];
    let mut is_tree = vec![false; n_pipes];
    let mut node_order = Vec::with_capacity(n_junctions);
    let mut tree_order = Vec::new();

    // Singleton rows are processed lowest pipe index first.
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n_pipes)
        .filter(|&j| unresolved_ends[j] == 1)
        .map(Reverse)
        .collect();

    while let Some(Reverse(j)) = heap.pop() {
        if is_tree[j] || unresolved_ends[j] != 1 {
            continue;
        }
        let (a, b) = endpoints[j];
        let (node, other) = match (a, b) {
            (Pos::Junction(x), o) if !resolved[x] => (x, o),
            (o, Pos::Junction(x)) if !resolved[x] => (x, o),
            _ => continue,
        };
        is_tree[j] = true;
        tree_order.push(j);
        resolved[node] = true;
        node_order.push(node);
        parent_edge[node] = j;
        parent_pos[node] = other;
        depth[node] = match other {
            Pos::Root => 1,
            Pos::Junction(p) => depth[p] + 1,
        };
        for &p in &incident[node] {
            if p != j && !is_tree[p] {
                unresolved_ends[p] -= 1;
                if unresolved_ends[p] == 1 {
                    heap.push(Reverse(p));
                }
            }
        }
    }

    if node_order.len() != n_junctions {
        return Err(Error::RankDeficient(format!(
            "only {} of {} junctions reachable from a fixed head",
            node_order.len(),
            n_junctions
        )));
    }

    let chord_edges: Vec<usize> = (0..n_pipes).filter(|&j| !is_tree[j]).collect();
    debug_assert_eq!(chord_edges.len(), n_pipes - n_junctions);

    let depth_of = |p: Pos| match p {
        Pos::Root => 0,
        Pos::Junction(i) => depth[i],
    };
    // Sign of a tree edge traversed child → parent: +1 when the pipe's
    // reference direction leaves the child.
    let travel_sign = |edge: usize, child: usize| -> i8 {
        if endpoints[edge].0 == Pos::Junction(child) {
            1
        } else {
            -1
        }
    };

    let mut cols = Vec::with_capacity(chord_edges.len());
    for &chord in &chord_edges {
        let (u, w) = endpoints[chord];
        let mut entries: Vec<(usize, i8)> = vec![(chord, 1)];
        // Cycle direction follows the chord (u → w), so the tree path runs
        // from w back to u: edges climbed from w keep their child → parent
        // sign, edges climbed from u are traversed parent → child and flip.
        let mut side_u = u;
        let mut side_w = w;
        while depth_of(side_w) > depth_of(side_u) {
            let Pos::Junction(x) = side_w else { unreachable!() };
            entries.push((parent_edge[x], travel_sign(parent_edge[x], x)));
            side_w = parent_pos[x];
        }
        while depth_of(side_u) > depth_of(side_w) {
            let Pos::Junction(x) = side_u else { unreachable!() };
            entries.push((parent_edge[x], -travel_sign(parent_edge[x], x)));
            side_u = parent_pos[x];
        }
        while side_u != side_w {
            let (Pos::Junction(x), Pos::Junction(y)) = (side_u, side_w) else {
                unreachable!("walks meet at the root at the latest")
            };
            entries.push((parent_edge[x], -travel_sign(parent_edge[x], x)));
            entries.push((parent_edge[y], travel_sign(parent_edge[y], y)));
            side_u = parent_pos[x];
            side_w = parent_pos[y];
        }
        entries.sort_unstable_by_key(|&(pipe, _)| pipe);
        cols.push(entries);
    }

    let mut in_e2 = vec![false; n_pipes];
    for col in &cols {
        for &(pipe, _) in col {
            in_e2[pipe] = true;
        }
    }
    let e2: Vec<usize> = (0..n_pipes).filter(|&j| in_e2[j]).collect();

    let mut pipe_order = tree_order;
    pipe_order.extend_from_slice(&chord_edges);

    Ok(NullBasis {
        n_pipes,
        cols,
        e2,
        tree_edges: {
            let mut t: Vec<usize> = (0..n_pipes).filter(|&j| is_tree[j]).collect();
            t.sort_unstable();
            t
        },
        chord_edges,
        pipe_order,
        node_order,
    })
}

/// Sparsity and conditioning summary of a basis, mirroring what one would
/// tabulate when comparing basis generators.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BasisDiagnostics {
    pub n_loops: usize,
    /// Condition number estimate of `ZᵀZ` by power/inverse iteration;
    /// 0 when the basis is empty.
    pub cond_ztz_estimate: f64,
    /// `nnz(ZᵀFZ) / nnz(A12ᵀFA12)` in percent, with `F` structurally full.
    pub nnz_ratio_percent: f64,
    /// `|E2| / n_p` in percent.
    pub loop_fraction_percent: f64,
}

/// Computes basis diagnostics against the continuity incidence `A12`. The
/// weighting diagonal is treated as structurally full, so only patterns
/// matter.
pub fn diagnostics(basis: &NullBasis, a12: &SparseMatrix) -> Result<BasisDiagnostics> {
    let n_l = basis.n_loops();
    let n_p = basis.n_pipes();
    if n_l == 0 {
        return Ok(BasisDiagnostics {
            n_loops: 0,
            cond_ztz_estimate: 0.0,
            nnz_ratio_percent: 0.0,
            loop_fraction_percent: 0.0,
        });
    }

    let z_rows: Vec<Vec<(usize, f64)>> = basis
        .row_view()
        .into_iter()
        .map(|r| r.into_iter().map(|(c, s)| (c, f64::from(s))).collect())
        .collect();
    let z_gram = GramAssembler::new(n_l, &z_rows);
    let a_gram = GramAssembler::new(a12.ncols(), &a12.to_row_lists());

    let ztz = z_gram.assemble(&vec![1.0; n_p])?;
    let cond = estimate_condition(&ztz)?;

    Ok(BasisDiagnostics {
        n_loops: n_l,
        cond_ztz_estimate: cond,
        nnz_ratio_percent: 100.0 * z_gram.pattern_nnz() as f64 / a_gram.pattern_nnz() as f64,
        loop_fraction_percent: 100.0 * basis.e2().len() as f64 / n_p as f64,
    })
}

/// Largest and smallest eigenvalue of an SPD matrix by 20 rounds of power
/// iteration and inverse iteration (relative tolerance 1e-6), returning
/// their ratio.
fn estimate_condition(x: &SparseMatrix) -> Result<f64> {
    let n = x.ncols();
    let normalize = |v: &mut [f64]| {
        let norm = vec_norm_inf(v).max(f64::MIN_POSITIVE);
        for e in v.iter_mut() {
            *e /= norm;
        }
        norm
    };
    let mut v = vec![1.0; n];
    normalize(&mut v);
    let mut lambda_max = 0.0;
    for _ in 0..20 {
        let mut w = x.matvec(&v);
        let lam = normalize(&mut w);
        v = w;
        if (lam - lambda_max).abs() <= 1e-6 * lam {
            lambda_max = lam;
            break;
        }
        lambda_max = lam;
    }

    let perm: Vec<usize> = (0..n).collect();
    let sym = Arc::new(symbolic_cholesky(x, &perm)?);
    let fac = numeric_cholesky(x, &sym)?;
    let mut v = vec![1.0; n];
    normalize(&mut v);
    let mut inv_lambda = 0.0;
    for _ in 0..20 {
        let mut w = fac.solve(&v)?;
        let lam = normalize(&mut w);
        v = w;
        if (lam - inv_lambda).abs() <= 1e-6 * lam {
            inv_lambda = lam;
            break;
        }
        inv_lambda = lam;
    }
    Ok(lambda_max * inv_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{FixedHead, HeadlossModel, Junction, Network, PipeSpec};

    fn pipe(id: &str, from: &str, to: &str) -> PipeSpec {
        PipeSpec {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length: 100.0,
            diameter: 0.3,
            roughness: 100.0,
            model: HeadlossModel::HazenWilliams,
        }
    }

    fn junction(id: &str) -> Junction {
        Junction { id: id.into(), demand: 0.001 }
    }

    fn basis_for(net: &Network) -> NullBasis {
        let (a12, a10) = net.incidence();
        build_fundamental_basis(&a12, &a10).unwrap()
    }

    fn check_kernel(net: &Network, basis: &NullBasis) {
        let (a12, _) = net.incidence();
        // Integer check of A12ᵀ·Z = 0, column by column.
        for c in 0..basis.n_loops() {
            let mut acc = vec![0i64; net.n_junctions()];
            for &(p, s) in basis.column(c) {
                for i in 0..net.n_junctions() {
                    let v = a12.get(p, i);
                    acc[i] += (v as i64) * i64::from(s);
                }
            }
            assert!(acc.iter().all(|&x| x == 0), "column {c} not in the kernel");
        }
    }

    #[test]
    fn tree_network_has_empty_basis() {
        let net = Network::build(
            vec![junction("A"), junction("B")],
            vec![FixedHead { id: "R".into(), head: 10.0 }],
            vec![pipe("P1", "R", "A"), pipe("P2", "A", "B")],
        )
        .unwrap();
        let b = basis_for(&net);
        assert_eq!(b.n_loops(), 0);
        assert!(b.e2().is_empty());
        assert_eq!(b.tree_edges(), &[0, 1]);
    }

    #[test]
    fn square_loop_single_column() {
        // Ring through the reservoir: four pipes, one pseudo-loop.
        let net = Network::build(
            vec![junction("a"), junction("b"), junction("c")],
            vec![FixedHead { id: "R".into(), head: 50.0 }],
            vec![pipe("P0", "R", "a"), pipe("P1", "a", "b"), pipe("P2", "b", "c"), pipe("P3", "c", "R")],
        )
        .unwrap();
        let b = basis_for(&net);
        assert_eq!(b.n_loops(), 1);
        let col = b.column(0);
        assert_eq!(col.len(), 4);
        assert!(col.iter().all(|&(_, s)| s == 1 || s == -1));
        // Chord carries +1.
        assert_eq!(b.chord_edges(), &[3]);
        assert_eq!(col.iter().find(|&&(p, _)| p == 3).unwrap().1, 1);
        check_kernel(&net, &b);
        assert_eq!(b.e2(), &[0, 1, 2, 3]);
    }

    #[test]
    fn parallel_pipes_make_a_two_entry_column() {
        let net = Network::build(
            vec![junction("a")],
            vec![FixedHead { id: "R".into(), head: 50.0 }],
            vec![pipe("P0", "R", "a"), pipe("P1", "R", "a")],
        )
        .unwrap();
        let b = basis_for(&net);
        assert_eq!(b.n_loops(), 1);
        let col = b.column(0);
        assert_eq!(col.len(), 2);
        // Chord P1 oriented with the cycle, tree pipe P0 against it.
        assert_eq!(col, &[(0, -1), (1, 1)]);
        check_kernel(&net, &b);
    }

    #[test]
    fn opposed_parallel_pipes_agree_in_sign() {
        // Same node pair, opposite reference directions.
        let net = Network::build(
            vec![junction("a")],
            vec![FixedHead { id: "R".into(), head: 50.0 }],
            vec![pipe("P0", "R", "a"), pipe("P1", "a", "R")],
        )
        .unwrap();
        let b = basis_for(&net);
        assert_eq!(b.column(0), &[(0, 1), (1, 1)]);
        check_kernel(&net, &b);
    }

    #[test]
    fn reservoir_to_reservoir_pipe_is_a_bare_chord() {
        let net = Network::build(
            vec![junction("a")],
            vec![
                FixedHead { id: "R1".into(), head: 50.0 },
                FixedHead { id: "R2".into(), head: 40.0 },
            ],
            vec![pipe("P0", "R1", "a"), pipe("P1", "a", "R2"), pipe("P2", "R1", "R2")],
        )
        .unwrap();
        let b = basis_for(&net);
        // Chords: P1 is still a tree candidate; exactly n_l = 2 columns.
        assert_eq!(b.n_loops(), 2);
        check_kernel(&net, &b);
        // The reservoir-to-reservoir pipe appears as chord with a
        // path through both reservoirs or alone.
        for c in 0..2 {
            let chord = b.chord_edges()[c];
            assert_eq!(b.column(c).iter().find(|&&(p, _)| p == chord).unwrap().1, 1);
        }
    }

    #[test]
    fn pivot_rows_are_triangular() {
        let net = Network::build(
            vec![junction("a"), junction("b"), junction("c")],
            vec![FixedHead { id: "R".into(), head: 50.0 }],
            vec![pipe("P0", "R", "a"), pipe("P1", "a", "b"), pipe("P2", "b", "c"), pipe("P3", "c", "R")],
        )
        .unwrap();
        let b = basis_for(&net);
        let (a12, _) = net.incidence();
        // Ordering pipes by pivot order and junctions by resolution order
        // must give a lower-triangular leading block with unit magnitude
        // diagonal.
        for (s, &jpipe) in b.pipe_order()[..net.n_junctions()].iter().enumerate() {
            for (t, &node) in b.node_order().iter().enumerate() {
                let v = a12.get(jpipe, node);
                if t == s {
                    assert_eq!(v.abs(), 1.0);
                } else if t > s {
                    assert_eq!(v, 0.0, "entry above the diagonal at pivot {s}");
                }
            }
        }
    }

    #[test]
    fn square_loop_gram_collapses_to_scalar() {
        // One 4-edge cycle: ZᵀFZ is the 1x1 matrix [f1+f2+f3+f4], and its
        // factor pattern is a single entry, whatever the weights.
        use crate::sparse::{symbolic_cholesky, GramAssembler};
        let net = Network::build(
            vec![junction("a"), junction("b"), junction("c")],
            vec![FixedHead { id: "R".into(), head: 50.0 }],
            vec![pipe("P0", "R", "a"), pipe("P1", "a", "b"), pipe("P2", "b", "c"), pipe("P3", "c", "R")],
        )
        .unwrap();
        let b = basis_for(&net);
        let rows: Vec<Vec<(usize, f64)>> = b
            .row_view()
            .into_iter()
            .map(|r| r.into_iter().map(|(c, s)| (c, f64::from(s))).collect())
            .collect();
        let gram = GramAssembler::new(b.n_loops(), &rows);
        let f = [2.0, 3.0, 5.0, 7.0];
        let x = gram.assemble(&f).unwrap();
        assert_eq!(x.nrows(), 1);
        assert_eq!(x.nnz(), 1);
        assert_eq!(x.get(0, 0), 17.0);
        let sym = symbolic_cholesky(&x, &[0]).unwrap();
        assert_eq!(sym.nnz_l(), 1);
    }

    #[test]
    fn diagnostics_square_loop() {
        let net = Network::build(
            vec![junction("a"), junction("b"), junction("c")],
            vec![FixedHead { id: "R".into(), head: 50.0 }],
            vec![pipe("P0", "R", "a"), pipe("P1", "a", "b"), pipe("P2", "b", "c"), pipe("P3", "c", "R")],
        )
        .unwrap();
        let b = basis_for(&net);
        let (a12, _) = net.incidence();
        let d = diagnostics(&b, &a12).unwrap();
        assert_eq!(d.n_loops, 1);
        // ZᵀZ = [4]: perfectly conditioned.
        assert!((d.cond_ztz_estimate - 1.0).abs() < 1e-9);
        assert_eq!(d.loop_fraction_percent, 100.0);
        assert!(d.nnz_ratio_percent > 0.0);
    }

    #[test]
    fn diagnostics_tree_degenerates_to_zero() {
        let net = Network::build(
            vec![junction("A")],
            vec![FixedHead { id: "R".into(), head: 10.0 }],
            vec![pipe("P1", "R", "A")],
        )
        .unwrap();
        let b = basis_for(&net);
        let (a12, _) = net.incidence();
        let d = diagnostics(&b, &a12).unwrap();
        assert_eq!(d.n_loops, 0);
        assert_eq!(d.cond_ztz_estimate, 0.0);
        assert_eq!(d.nnz_ratio_percent, 0.0);
        assert_eq!(d.loop_fraction_percent, 0.0);
    }
}
