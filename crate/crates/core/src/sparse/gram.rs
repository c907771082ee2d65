//! Assembly of diagonally weighted Gram products `B = Aᵀ·diag(w)·A` where the
//! rows of `A` are short and fixed (incidence rows, null-basis rows).
//!
//! The sparsity pattern of `B` is independent of the weights, so it is
//! computed once together with a per-row scatter map; afterwards a full
//! rebuild or an incremental update touching only rows whose weight changed
//! both land values in the same slots. That keeps one symbolic Cholesky
//! factorization valid for every assembled matrix.

use crate::error::{Error, Result};

use super::{SparseMatrix, Symmetry};

#[derive(Clone, Debug)]
pub struct GramAssembler {
    dim: usize,
    n_rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// CSR-style map: row r scatters into positions
    /// `scatter_pos[scatter_ptr[r]..scatter_ptr[r+1]]` with the matching
    /// coefficient (the product of the two row entries involved).
    scatter_ptr: Vec<usize>,
    scatter_pos: Vec<usize>,
    scatter_coef: Vec<f64>,
}

impl GramAssembler {
    /// Builds the pattern and scatter map from the rows of `A`. Each row is a
    /// list of `(column, coefficient)` pairs; empty rows contribute nothing
    /// regardless of their weight.
    pub fn new(dim: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let n_rows = rows.len();
        // Structural pattern: every (c, d) pair of columns sharing a row.
        let mut trips: Vec<(usize, usize)> = Vec::new();
        for row in rows {
            for &(c, _) in row {
                for &(d, _) in row {
                    trips.push((d, c)); // (row, col) in the output matrix
                }
            }
        }
        trips.sort_unstable_by_key(|&(r, c)| (c, r));
        trips.dedup();
        let mut col_ptr = vec![0usize; dim + 1];
        let mut row_idx = Vec::with_capacity(trips.len());
        for &(r, c) in &trips {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
        }
        for j in 0..dim {
            col_ptr[j + 1] += col_ptr[j];
        }

        let find = |r: usize, c: usize| -> usize {
            let lo = col_ptr[c];
            let hi = col_ptr[c + 1];
            lo + row_idx[lo..hi].binary_search(&r).expect("pattern entry")
        };

        let mut scatter_ptr = vec![0usize; n_rows + 1];
        for (r, row) in rows.iter().enumerate() {
            scatter_ptr[r + 1] = scatter_ptr[r] + row.len() * row.len();
        }
        let mut scatter_pos = Vec::with_capacity(scatter_ptr[n_rows]);
        let mut scatter_coef = Vec::with_capacity(scatter_ptr[n_rows]);
        for row in rows {
            for &(c, sc) in row {
                for &(d, sd) in row {
                    scatter_pos.push(find(d, c));
                    scatter_coef.push(sc * sd);
                }
            }
        }

        Self {
            dim,
            n_rows,
            col_ptr,
            row_idx,
            scatter_ptr,
            scatter_pos,
            scatter_coef,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn pattern_nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Full assembly of `Aᵀ·diag(w)·A`. The pattern is always the complete
    /// structural pattern, so zero weights keep their slots.
    pub fn assemble(&self, weights: &[f64]) -> Result<SparseMatrix> {
        if weights.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rows",
                weights.len(),
                self.n_rows
            )));
        }
        let mut values = vec![0.0f64; self.pattern_nnz()];
        for r in 0..self.n_rows {
            let w = weights[r];
            if self.scatter_ptr[r] == self.scatter_ptr[r + 1] {
                continue;
            }
            for p in self.scatter_ptr[r]..self.scatter_ptr[r + 1] {
                values[self.scatter_pos[p]] += w * self.scatter_coef[p];
            }
        }
        SparseMatrix::new(
            self.dim,
            self.dim,
            self.col_ptr.clone(),
            self.row_idx.clone(),
            values,
            Symmetry::General,
        )
    }

    /// Applies `B += Σ_{r∈rows} (w_new[r] − w_old[r])·aᵣaᵣᵀ` in place.
    ///
    /// `mat` must carry exactly the assembler's pattern, otherwise
    /// `PatternMismatch` is returned and the matrix is left untouched.
    pub fn update_into(
        &self,
        mat: &mut SparseMatrix,
        w_new: &[f64],
        w_old: &[f64],
        rows: &[usize],
    ) -> Result<()> {
        if w_new.len() != self.n_rows || w_old.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "{}/{} weights for {} rows",
                w_new.len(),
                w_old.len(),
                self.n_rows
            )));
        }
        if !self.matches_pattern(mat) {
            return Err(Error::PatternMismatch(
                "matrix was not assembled from this pattern",
            ));
        }
        for &r in rows {
            if r >= self.n_rows {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    len: self.n_rows,
                });
            }
            let dw = w_new[r] - w_old[r];
            if dw == 0.0 {
                continue;
            }
            let values = mat.values_mut();
            for p in self.scatter_ptr[r]..self.scatter_ptr[r + 1] {
                values[self.scatter_pos[p]] += dw * self.scatter_coef[p];
            }
        }
        Ok(())
    }

    pub fn matches_pattern(&self, mat: &SparseMatrix) -> bool {
        mat.nrows() == self.dim
            && mat.ncols() == self.dim
            && mat.col_ptr() == self.col_ptr.as_slice()
            && mat.row_idx() == self.row_idx.as_slice()
    }
}
