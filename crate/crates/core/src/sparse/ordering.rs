//! Fill-reducing ordering by classic minimum degree on the quotient graph.
//!
//! No supernode detection and no multiple elimination: at every step the
//! single live vertex of smallest exact external degree is eliminated, ties
//! broken by lowest original index so the ordering is deterministic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::SparseMatrix;

/// Computes a fill-reducing permutation for a matrix with symmetric pattern.
///
/// Returns `perm` with `perm[k]` = original index eliminated at step `k`, so
/// the permuted matrix is `B[k, l] = A[perm[k], perm[l]]`.
pub fn fill_reducing_order(a: &SparseMatrix) -> Vec<usize> {
    assert_eq!(a.nrows(), a.ncols(), "ordering requires a square matrix");
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }

    // Undirected adjacency from the pattern of A + Aᵀ, diagonal dropped.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        let (rows, _) = a.col(j);
        for &i in rows {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }

    // Quotient graph state. An eliminated vertex v becomes element v whose
    // variable list is kept in elem_vars[v]; absorbed elements are dropped
    // lazily from var_elems lists.
    let mut var_elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut alive = vec![true; n];
    let mut absorbed = vec![false; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((degree[v], v))).collect();
    let mut marker = vec![0u32; n];
    let mut stamp = 0u32;
    let mut order = Vec::with_capacity(n);
    let mut reach = Vec::new();

    while order.len() < n {
        let v = loop {
            let Reverse((d, v)) = heap.pop().expect("heap exhausted before ordering finished");
            if alive[v] && degree[v] == d {
                break v;
            }
        };
        order.push(v);
        alive[v] = false;

        // Reach of v: live neighbours directly adjacent or shared through an
        // element. marker distinguishes {v} ∪ reach.
        stamp += 1;
        marker[v] = stamp;
        reach.clear();
        for &u in &adj[v] {
            if alive[u] && marker[u] != stamp {
                marker[u] = stamp;
                reach.push(u);
            }
        }
        for &e in &var_elems[v] {
            if absorbed[e] {
                continue;
            }
            for &u in &elem_vars[e] {
                if alive[u] && marker[u] != stamp {
                    marker[u] = stamp;
                    reach.push(u);
                }
            }
        }
        // Elements reachable from v are absorbed into the new element v.
        for &e in &var_elems[v] {
            if !absorbed[e] {
                absorbed[e] = true;
                elem_vars[e] = Vec::new();
            }
        }
        var_elems[v] = Vec::new();
        adj[v] = Vec::new();
        elem_vars[v] = reach.clone();

        // Prune each reached variable: drop dead or now-covered neighbours
        // and absorbed elements, then attach element v.
        for &u in &reach {
            adj[u].retain(|&w| alive[w] && marker[w] != stamp);
            var_elems[u].retain(|&e| !absorbed[e]);
            var_elems[u].push(v);
        }

        // Exact external degree for every variable whose neighbourhood
        // changed.
        for &u in &reach {
            stamp += 1;
            marker[u] = stamp;
            let mut deg = 0usize;
            for &w in &adj[u] {
                if marker[w] != stamp {
                    marker[w] = stamp;
                    deg += 1;
                }
            }
            for &e in &var_elems[u] {
                for &w in &elem_vars[e] {
                    if alive[w] && marker[w] != stamp {
                        marker[w] = stamp;
                        deg += 1;
                    }
                }
            }
            degree[u] = deg;
            heap.push(Reverse((deg, u)));
        }
    }
    order
}
