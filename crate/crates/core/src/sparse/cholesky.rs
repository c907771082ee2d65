//! Two-phase sparse Cholesky: a symbolic analysis that depends only on the
//! sparsity pattern (elimination tree, fill pattern of L, permutation) and an
//! up-looking simplicial numeric phase that can be repeated against the same
//! symbolic factor for any matrix with that pattern.

use std::sync::Arc;

use crate::error::{Error, Result};

use super::{SparseMatrix, Symmetry};

const NO_PARENT: usize = usize::MAX;

/// Pattern-only part of a Cholesky factorization of `P·A·Pᵀ = L·Lᵀ`.
///
/// Reusable across every matrix sharing the analysed sparsity pattern; the
/// numeric phase never allocates pattern data.
#[derive(Clone, Debug)]
pub struct SymbolicFactor {
    n: usize,
    /// `perm[k]` = original index of the k-th pivot.
    perm: Vec<usize>,
    /// `iperm[old]` = position of `old` in the elimination order.
    iperm: Vec<usize>,
    /// Elimination-tree parent of each (permuted) column; `usize::MAX` at roots.
    parent: Vec<usize>,
    /// Pattern of L, column compressed; the diagonal entry leads each column.
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    /// Strictly-lower pattern of L by rows (ascending column indices), the
    /// iteration order of the up-looking numeric phase.
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
}

impl SymbolicFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.l_row_idx.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn parent(&self) -> &[usize] {
        &self.parent
    }

    pub fn l_col_ptr(&self) -> &[usize] {
        &self.l_col_ptr
    }

    pub fn l_row_idx(&self) -> &[usize] {
        &self.l_row_idx
    }
}

/// Numeric Cholesky factor holding values aligned with the symbolic pattern.
#[derive(Clone, Debug)]
pub struct NumericFactor {
    symbolic: Arc<SymbolicFactor>,
    l_values: Vec<f64>,
}

impl NumericFactor {
    pub fn symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.symbolic
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    /// Solves `A·x = b` by forward and back substitution through the factor.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let s = &*self.symbolic;
        if b.len() != s.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} != system size {}",
                b.len(),
                s.n
            )));
        }
        // y = L⁻¹ (P b)
        let mut y: Vec<f64> = (0..s.n).map(|k| b[s.perm[k]]).collect();
        for j in 0..s.n {
            let range = s.l_col_ptr[j]..s.l_col_ptr[j + 1];
            let diag = self.l_values[range.start];
            let yj = y[j] / diag;
            y[j] = yj;
            for p in range.start + 1..range.end {
                y[s.l_row_idx[p]] -= self.l_values[p] * yj;
            }
        }
        // x = L⁻ᵀ y
        for j in (0..s.n).rev() {
            let range = s.l_col_ptr[j]..s.l_col_ptr[j + 1];
            let mut acc = y[j];
            for p in range.start + 1..range.end {
                acc -= self.l_values[p] * y[s.l_row_idx[p]];
            }
            y[j] = acc / self.l_values[range.start];
        }
        let mut x = vec![0.0; s.n];
        for k in 0..s.n {
            x[s.perm[k]] = y[k];
        }
        Ok(x)
    }
}

/// Upper-triangle column patterns of the permuted matrix, as sorted deduped
/// row lists per column (diagonal included when present).
fn permuted_upper_pattern(a: &SparseMatrix, iperm: &[usize]) -> Vec<Vec<usize>> {
    let n = a.ncols();
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        let (rows, _) = a.col(j);
        for &i in rows {
            let (pi, pj) = (iperm[i], iperm[j]);
            let (lo, hi) = if pi <= pj { (pi, pj) } else { (pj, pi) };
            cols[hi].push(lo);
        }
    }
    for c in &mut cols {
        c.sort_unstable();
        c.dedup();
    }
    cols
}

/// Elimination tree of a permuted symmetric pattern (Liu's algorithm with
/// path compression).
fn etree(upper: &[Vec<usize>]) -> Vec<usize> {
    let n = upper.len();
    let mut parent = vec![NO_PARENT; n];
    let mut ancestor = vec![NO_PARENT; n];
    for (k, col) in upper.iter().enumerate() {
        for &i in col {
            let mut i = i;
            while i != NO_PARENT && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NO_PARENT {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Row pattern of L(k, :): the union of etree paths from every structural
/// entry of column k up towards k. Returned sorted ascending.
fn row_reach(upper_col: &[usize], k: usize, parent: &[usize], marker: &mut [usize], stamp: usize, out: &mut Vec<usize>) {
    out.clear();
    marker[k] = stamp;
    for &i in upper_col {
        if i >= k {
            continue;
        }
        let mut i = i;
        while marker[i] != stamp {
            marker[i] = stamp;
            out.push(i);
            i = parent[i];
        }
    }
    out.sort_unstable();
}

/// Symbolic analysis of `P·A·Pᵀ` for a symmetric-pattern matrix `a` under the
/// permutation `perm` (`perm[k]` = original index of pivot k).
///
/// The resulting pattern of L is exact for elimination without numerical
/// cancellation and contains the lower triangle of the permuted input.
pub fn symbolic_cholesky(a: &SparseMatrix, perm: &[usize]) -> Result<SymbolicFactor> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.ncols();
    if perm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation length {} != n = {}",
            perm.len(),
            n
        )));
    }
    let mut iperm = vec![usize::MAX; n];
    for (k, &old) in perm.iter().enumerate() {
        if old >= n || iperm[old] != usize::MAX {
            return Err(Error::DimensionMismatch("invalid permutation".into()));
        }
        iperm[old] = k;
    }

    let upper = permuted_upper_pattern(a, &iperm);
    let parent = etree(&upper);

    let mut marker = vec![usize::MAX; n];
    let mut reach = Vec::new();
    let mut reaches: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut col_count = vec![1usize; n]; // diagonal
    for k in 0..n {
        row_reach(&upper[k], k, &parent, &mut marker, k, &mut reach);
        for &j in &reach {
            col_count[j] += 1;
        }
        reaches.push(reach.clone());
    }

    let mut l_col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        l_col_ptr[j + 1] = l_col_ptr[j] + col_count[j];
    }
    let nnz = l_col_ptr[n];
    let mut l_row_idx = vec![0usize; nnz];
    let mut cursor: Vec<usize> = (0..n).map(|j| l_col_ptr[j] + 1).collect();
    for j in 0..n {
        l_row_idx[l_col_ptr[j]] = j;
    }
    let mut row_ptr = vec![0usize; n + 1];
    for k in 0..n {
        row_ptr[k + 1] = row_ptr[k] + reaches[k].len();
    }
    let mut row_cols = vec![0usize; row_ptr[n]];
    for (k, reach) in reaches.iter().enumerate() {
        row_cols[row_ptr[k]..row_ptr[k + 1]].copy_from_slice(reach);
        for &j in reach {
            l_row_idx[cursor[j]] = k;
            cursor[j] += 1;
        }
    }

    Ok(SymbolicFactor {
        n,
        perm: perm.to_vec(),
        iperm,
        parent,
        l_col_ptr,
        l_row_idx,
        row_ptr,
        row_cols,
    })
}

/// Numeric up-looking factorization of an SPD matrix against a previously
/// computed symbolic factor. The matrix pattern must be contained in the
/// analysed pattern; values land in slots aligned with it.
pub fn numeric_cholesky(a: &SparseMatrix, symbolic: &Arc<SymbolicFactor>) -> Result<NumericFactor> {
    let s = &**symbolic;
    if a.nrows() != a.ncols() || a.ncols() != s.n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, symbolic factor is for {}",
            a.nrows(),
            a.ncols(),
            s.n
        )));
    }
    let n = s.n;

    // Permuted upper-triangle columns with values, rebuilt per call.
    let mut count = vec![0usize; n + 1];
    let full = match a.symmetry() {
        Symmetry::General => None,
        Symmetry::SymmetricLowerStored => Some(a.expand_symmetric()),
    };
    let a = full.as_ref().unwrap_or(a);
    for j in 0..n {
        let (rows, _) = a.col(j);
        for &i in rows {
            let (pi, pj) = (s.iperm[i], s.iperm[j]);
            if pi <= pj {
                count[pj + 1] += 1;
            }
        }
    }
    for k in 0..n {
        count[k + 1] += count[k];
    }
    let upper_ptr = count.clone();
    let mut upper_row = vec![0usize; upper_ptr[n]];
    let mut upper_val = vec![0.0f64; upper_ptr[n]];
    for j in 0..n {
        let (rows, vals) = a.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            let (pi, pj) = (s.iperm[i], s.iperm[j]);
            if pi <= pj {
                let dst = count[pj];
                upper_row[dst] = pi;
                upper_val[dst] = v;
                count[pj] += 1;
            }
        }
    }

    let mut l_values = vec![0.0f64; s.nnz_l()];
    let mut cursor: Vec<usize> = (0..n).map(|j| s.l_col_ptr[j] + 1).collect();
    let mut x = vec![0.0f64; n];
    let mut marker = vec![usize::MAX; n];

    for k in 0..n {
        let row = &s.row_cols[s.row_ptr[k]..s.row_ptr[k + 1]];
        marker[k] = k;
        for &j in row {
            marker[j] = k;
        }
        // Scatter column k of the permuted upper triangle.
        let mut d = 0.0f64;
        for p in upper_ptr[k]..upper_ptr[k + 1] {
            let i = upper_row[p];
            if i == k {
                d += upper_val[p];
            } else if marker[i] == k {
                x[i] += upper_val[p];
            } else {
                return Err(Error::PatternMismatch(
                    "matrix entry outside the symbolic factor pattern",
                ));
            }
        }
        // Solve the k-th row of L against the finished columns.
        for &j in row {
            let lkj = x[j] / l_values[s.l_col_ptr[j]];
            x[j] = 0.0;
            for p in s.l_col_ptr[j] + 1..cursor[j] {
                x[s.l_row_idx[p]] -= l_values[p] * lkj;
            }
            d -= lkj * lkj;
            debug_assert_eq!(s.l_row_idx[cursor[j]], k);
            l_values[cursor[j]] = lkj;
            cursor[j] += 1;
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { col: k, pivot: d });
        }
        l_values[s.l_col_ptr[k]] = d.sqrt();
    }

    Ok(NumericFactor {
        symbolic: Arc::clone(symbolic),
        l_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::fill_reducing_order;

    fn natural(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    fn spd(n: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix {
        SparseMatrix::from_triplets(n, n, entries, Symmetry::General).unwrap()
    }

    #[test]
    fn diagonal_pattern_stays_diagonal() {
        let a = SparseMatrix::identity(3);
        let s = symbolic_cholesky(&a, &natural(3)).unwrap();
        assert_eq!(s.nnz_l(), 3);
        let f = numeric_cholesky(&a, &Arc::new(s)).unwrap();
        assert_eq!(f.l_values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_full_pattern() {
        let a = spd(2, &[(0, 0, 4.0), (1, 0, 2.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let s = symbolic_cholesky(&a, &natural(2)).unwrap();
        assert_eq!(s.nnz_l(), 3);
        // Hand factorization: L = [[2, 0], [1, sqrt(2)]].
        let f = numeric_cholesky(&a, &Arc::new(s)).unwrap();
        assert!((f.l_values()[0] - 2.0).abs() < 1e-15);
        assert!((f.l_values()[1] - 1.0).abs() < 1e-15);
        assert!((f.l_values()[2] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        // Eigenvalues 3 and -1.
        let a = spd(2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 1, 2.0), (1, 1, 1.0)]);
        let s = Arc::new(symbolic_cholesky(&a, &natural(2)).unwrap());
        match numeric_cholesky(&a, &s) {
            Err(Error::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = SparseMatrix::identity(4);
        let s = Arc::new(symbolic_cholesky(&a, &natural(4)).unwrap());
        let f = numeric_cholesky(&a, &s).unwrap();
        let b = vec![3.0, -1.0, 0.5, 2.0];
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn small_solve_matches_dense_elimination() {
        // Fixture derived by a dense 2x2 solve: [[4,2],[2,3]] x = [8,7]
        // gives x = [1.25, 1.5].
        let a = spd(2, &[(0, 0, 4.0), (1, 0, 2.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let s = Arc::new(symbolic_cholesky(&a, &natural(2)).unwrap());
        let f = numeric_cholesky(&a, &s).unwrap();
        let x = f.solve(&[8.0, 7.0]).unwrap();
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_wrong_rhs_length() {
        let a = SparseMatrix::identity(3);
        let s = Arc::new(symbolic_cholesky(&a, &natural(3)).unwrap());
        let f = numeric_cholesky(&a, &s).unwrap();
        assert!(matches!(f.solve(&[1.0, 2.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn refactorization_is_bit_identical() {
        let a = spd(
            3,
            &[
                (0, 0, 5.0),
                (1, 1, 6.0),
                (2, 2, 7.0),
                (1, 0, 1.0),
                (0, 1, 1.0),
                (2, 1, 2.0),
                (1, 2, 2.0),
            ],
        );
        let perm = fill_reducing_order(&a);
        let s = Arc::new(symbolic_cholesky(&a, &perm).unwrap());
        let f1 = numeric_cholesky(&a, &s).unwrap();
        // Factor a different matrix with the same pattern in between.
        let mut b = a.clone();
        for v in b.values_mut() {
            *v *= 3.5;
        }
        let _ = numeric_cholesky(&b, &s).unwrap();
        let f2 = numeric_cholesky(&a, &s).unwrap();
        assert_eq!(f1.l_values(), f2.l_values());
    }

    #[test]
    fn factor_with_subset_pattern_works() {
        // Analyse a dense 3x3 pattern, factor a diagonal matrix against it.
        let mut t = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                t.push((i, j, if i == j { 2.0 } else { 0.5 }));
            }
        }
        let dense = spd(3, &t);
        let s = Arc::new(symbolic_cholesky(&dense, &natural(3)).unwrap());
        let diag = spd(3, &[(0, 0, 4.0), (1, 1, 9.0), (2, 2, 16.0)]);
        let f = numeric_cholesky(&diag, &s).unwrap();
        let x = f.solve(&[4.0, 9.0, 32.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);
        assert!((x[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_pattern_entry_is_detected() {
        let diag = SparseMatrix::identity(3);
        let s = Arc::new(symbolic_cholesky(&diag, &natural(3)).unwrap());
        let full = spd(3, &[(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (2, 0, 1.0), (0, 2, 1.0)]);
        assert!(matches!(
            numeric_cholesky(&full, &s),
            Err(Error::PatternMismatch(_))
        ));
    }
}
