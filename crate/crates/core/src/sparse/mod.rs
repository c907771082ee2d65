//! Compressed sparse column storage and the direct-solver kernel built on it:
//! fill-reducing ordering, symbolic/numeric Cholesky factorization and
//! triangular solves, plus assembly of diagonally weighted Gram products
//! `Aᵀ·diag(w)·A` with a fixed sparsity pattern.

mod cholesky;
mod gram;
mod mm;
mod ordering;

pub use cholesky::{numeric_cholesky, symbolic_cholesky, NumericFactor, SymbolicFactor};
pub use gram::GramAssembler;
pub use mm::{read_matrix_market, write_matrix_market};
pub use ordering::fill_reducing_order;

use crate::error::{Error, Result};

/// How the stored entries of a [`SparseMatrix`] are to be interpreted.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Symmetry {
    /// All structural entries are stored explicitly.
    General,
    /// Only the lower triangle (including the diagonal) is stored; the matrix
    /// is implicitly symmetric.
    SymmetricLowerStored,
}

/// Sparse matrix in compressed sparse column form.
///
/// Row indices are strictly increasing within each column and `col_ptr` is
/// monotone with `col_ptr[ncols] == nnz`; both are checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    symmetry: Symmetry,
}

impl SparseMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
        symmetry: Symmetry,
    ) -> Result<Self> {
        if col_ptr.len() != ncols + 1 {
            return Err(Error::DimensionMismatch(format!(
                "col_ptr length {} != ncols + 1 = {}",
                col_ptr.len(),
                ncols + 1
            )));
        }
        if col_ptr[0] != 0 || *col_ptr.last().unwrap() != row_idx.len() {
            return Err(Error::DimensionMismatch(
                "col_ptr does not span the index array".into(),
            ));
        }
        if row_idx.len() != values.len() {
            return Err(Error::DimensionMismatch(
                "row index and value arrays differ in length".into(),
            ));
        }
        for j in 0..ncols {
            if col_ptr[j] > col_ptr[j + 1] {
                return Err(Error::DimensionMismatch("col_ptr not monotone".into()));
            }
            let col = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            for w in col.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::DimensionMismatch(format!(
                        "row indices not strictly increasing in column {j}"
                    )));
                }
            }
            if let Some(&last) = col.last() {
                if last >= nrows {
                    return Err(Error::DimensionMismatch(format!(
                        "row index {last} out of bounds in column {j}"
                    )));
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
            symmetry,
        })
    }

    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
        symmetry: Symmetry,
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::new(nrows, ncols, col_ptr, row_idx, values, symmetry)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetry: Symmetry::General,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Entry lookup by binary search; zero when absent. For symmetric
    /// lower-stored matrices the upper triangle is resolved by mirroring.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if self.symmetry == Symmetry::SymmetricLowerStored && i < j {
            (j, i)
        } else {
            (i, j)
        };
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// y = A·x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension");
        let mut y = vec![0.0; self.nrows];
        match self.symmetry {
            Symmetry::General => {
                for j in 0..self.ncols {
                    let xj = x[j];
                    if xj == 0.0 {
                        continue;
                    }
                    let (rows, vals) = self.col(j);
                    for (&i, &v) in rows.iter().zip(vals) {
                        y[i] += v * xj;
                    }
                }
            }
            Symmetry::SymmetricLowerStored => {
                for j in 0..self.ncols {
                    let (rows, vals) = self.col(j);
                    for (&i, &v) in rows.iter().zip(vals) {
                        y[i] += v * x[j];
                        if i != j {
                            y[j] += v * x[i];
                        }
                    }
                }
            }
        }
        y
    }

    /// y = Aᵀ·x.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec_t dimension");
        match self.symmetry {
            Symmetry::General => {
                let mut y = vec![0.0; self.ncols];
                for j in 0..self.ncols {
                    let (rows, vals) = self.col(j);
                    let mut acc = 0.0;
                    for (&i, &v) in rows.iter().zip(vals) {
                        acc += v * x[i];
                    }
                    y[j] = acc;
                }
                y
            }
            Symmetry::SymmetricLowerStored => self.matvec(x),
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut count = vec![0usize; self.nrows + 1];
        for &i in &self.row_idx {
            count[i + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let mut col_ptr = count.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                let dst = count[i];
                row_idx[dst] = j;
                values[dst] = self.values[p];
                count[i] += 1;
            }
        }
        col_ptr.truncate(self.nrows + 1);
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr,
            row_idx,
            values,
            symmetry: Symmetry::General,
        }
    }

    /// Expands a lower-stored symmetric matrix into explicit full storage.
    /// General matrices are returned unchanged.
    pub fn expand_symmetric(&self) -> SparseMatrix {
        if self.symmetry == Symmetry::General {
            return self.clone();
        }
        let mut trips = Vec::with_capacity(2 * self.nnz());
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                trips.push((i, j, v));
                if i != j {
                    trips.push((j, i, v));
                }
            }
        }
        SparseMatrix::from_triplets(self.nrows, self.ncols, &trips, Symmetry::General)
            .expect("expansion of a valid matrix cannot fail")
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let full = self.expand_symmetric();
        let mut row_sum = vec![0.0; full.nrows];
        for (&i, &v) in full.row_idx.iter().zip(&full.values) {
            row_sum[i] += v.abs();
        }
        row_sum.into_iter().fold(0.0, f64::max)
    }

    /// Dense copy in row-major order, for small-matrix tests and oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let full = self.expand_symmetric();
        let mut d = vec![vec![0.0; full.ncols]; full.nrows];
        for j in 0..full.ncols {
            let (rows, vals) = full.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                d[i][j] = v;
            }
        }
        d
    }

    /// Row-wise copy: for each row, its `(column, value)` pairs in ascending
    /// column order.
    pub fn to_row_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nrows];
        for j in 0..self.ncols {
            let (ridx, vals) = self.col(j);
            for (&i, &v) in ridx.iter().zip(vals) {
                rows[i].push((j, v));
            }
        }
        rows
    }

    /// True when both matrices share an identical sparsity pattern.
    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.col_ptr == other.col_ptr
            && self.row_idx == other.row_idx
    }
}

/// Infinity norm of a vector.
pub fn vec_norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)],
            Symmetry::General,
        )
        .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 1), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn rejects_bad_col_ptr() {
        let err = SparseMatrix::new(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0], Symmetry::General);
        assert!(err.is_err());
    }

    #[test]
    fn matvec_and_transpose() {
        // [[1, 2], [0, 3], [4, 0]]
        let a = SparseMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (2, 0, 4.0), (0, 1, 2.0), (1, 1, 3.0)],
            Symmetry::General,
        )
        .unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 3.0, 4.0]);
        assert_eq!(a.matvec_t(&[1.0, 1.0, 1.0]), vec![5.0, 5.0]);
        let at = a.transpose();
        assert_eq!(at.nrows(), 2);
        assert_eq!(at.get(0, 2), 4.0);
        assert_eq!(at.get(1, 0), 2.0);
    }

    #[test]
    fn symmetric_expansion_round_trip() {
        // lower-stored [[2, -1], [-1, 2]]
        let low = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 2.0), (1, 0, -1.0), (1, 1, 2.0)],
            Symmetry::SymmetricLowerStored,
        )
        .unwrap();
        assert_eq!(low.get(0, 1), -1.0);
        let full = low.expand_symmetric();
        assert_eq!(full.nnz(), 4);
        assert_eq!(full.get(0, 1), -1.0);
        assert_eq!(low.matvec(&[1.0, 2.0]), full.matvec(&[1.0, 2.0]));
        assert!((low.norm_inf() - 3.0).abs() < 1e-15);
    }
}
