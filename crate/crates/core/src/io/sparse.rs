//! Compressed sparse matrix holding both row (CSR) and column (CSC) views.

use super::IoError;

/// A real sparse matrix stored simultaneously in CSR and CSC form.
///
/// Indices inside each row (CSR) and each column (CSC) are sorted and unique.
/// Least-squares data uses the CSC view for block gradients and the CSR view
/// for sub-function (row) supports; SVM data uses CSR for samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Explicit zeros are
    /// kept; duplicate coordinates are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, IoError> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(IoError::Shape(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(IoError::Shape(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut row_val = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            row_ptr[r + 1] += 1;
            row_idx.push(c);
            row_val.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self::from_csr_unchecked(rows, cols, row_ptr, row_idx, row_val))
    }

    /// Builds a matrix from CSR arrays, validating sortedness and ranges.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        row_val: Vec<f64>,
    ) -> Result<Self, IoError> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(IoError::Shape("row pointer has wrong length".into()));
        }
        if row_idx.len() != row_val.len() || *row_ptr.last().unwrap() != row_idx.len() {
            return Err(IoError::Shape("row pointer does not match entry count".into()));
        }
        for r in 0..rows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(IoError::Shape("row pointer decreases".into()));
            }
            let idx = &row_idx[row_ptr[r]..row_ptr[r + 1]];
            if idx.iter().any(|&c| c >= cols) {
                return Err(IoError::Shape(format!("row {r} has a column index out of range")));
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(IoError::Shape(format!("row {r} indices not strictly increasing")));
            }
        }
        Ok(Self::from_csr_unchecked(rows, cols, row_ptr, row_idx, row_val))
    }

    fn from_csr_unchecked(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        row_val: Vec<f64>,
    ) -> Self {
        let (col_ptr, col_idx, col_val) = transpose_compressed(rows, cols, &row_ptr, &row_idx, &row_val);
        SparseMatrix {
            rows,
            cols,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        }
    }

    pub fn identity(n: usize) -> Self {
        let trips: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &trips).expect("identity is well formed")
    }

    /// Dense row-major input; zeros are dropped.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        let mut trips = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = data[r * cols + c];
                if v != 0.0 {
                    trips.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows, cols, &trips).expect("dense input is well formed")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.row_idx[a..b], &self.row_val[a..b])
    }

    /// Row indices and values of column `c`.
    #[inline]
    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[c], self.col_ptr[c + 1]);
        (&self.col_idx[a..b], &self.col_val[a..b])
    }

    pub fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.row_ptr, &self.row_idx, &self.row_val)
    }

    /// Swaps the two views; no data is copied beyond the move.
    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
            row_val: self.col_val.clone(),
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
            col_val: self.row_val.clone(),
        }
    }

    /// Returns a copy with every row `r` multiplied by `scale[r]`.
    pub fn scale_rows(&self, scale: &[f64]) -> SparseMatrix {
        assert_eq!(scale.len(), self.rows);
        let mut val = self.row_val.clone();
        for r in 0..self.rows {
            for v in &mut val[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v *= scale[r];
            }
        }
        Self::from_csr_unchecked(self.rows, self.cols, self.row_ptr.clone(), self.row_idx.clone(), val)
    }

    /// Returns a copy with every column `c` multiplied by `scale[c]`.
    pub fn scale_cols(&self, scale: &[f64]) -> SparseMatrix {
        assert_eq!(scale.len(), self.cols);
        let val: Vec<f64> = self
            .row_idx
            .iter()
            .zip(&self.row_val)
            .map(|(&c, &v)| v * scale[c])
            .collect();
        Self::from_csr_unchecked(self.rows, self.cols, self.row_ptr.clone(), self.row_idx.clone(), val)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix, IoError> {
        if self.cols != other.cols {
            return Err(IoError::Shape("vstack with different column counts".into()));
        }
        let mut row_ptr = self.row_ptr.clone();
        let base = self.nnz();
        row_ptr.extend(other.row_ptr[1..].iter().map(|p| p + base));
        let mut row_idx = self.row_idx.clone();
        row_idx.extend_from_slice(&other.row_idx);
        let mut row_val = self.row_val.clone();
        row_val.extend_from_slice(&other.row_val);
        Ok(Self::from_csr_unchecked(self.rows + other.rows, self.cols, row_ptr, row_idx, row_val))
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let (idx, val) = self.row(r);
                idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `y = A^T x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|c| {
                let (idx, val) = self.col(c);
                idx.iter().zip(val).map(|(&r, &v)| v * x[r]).sum()
            })
            .collect()
    }

    pub fn col_sq_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| self.col(c).1.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn row_sq_norms(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).1.iter().map(|v| v * v).sum())
            .collect()
    }

    /// Row-major dense copy; intended for tests and small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                out[r * self.cols + c] = v;
            }
        }
        out
    }
}

fn transpose_compressed(
    rows: usize,
    cols: usize,
    ptr: &[usize],
    idx: &[usize],
    val: &[f64],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut out_ptr = vec![0usize; cols + 1];
    for &c in idx {
        out_ptr[c + 1] += 1;
    }
    for c in 0..cols {
        out_ptr[c + 1] += out_ptr[c];
    }
    let mut next = out_ptr.clone();
    let mut out_idx = vec![0usize; idx.len()];
    let mut out_val = vec![0.0; idx.len()];
    // Row-major traversal keeps row indices sorted within each column.
    for r in 0..rows {
        for k in ptr[r]..ptr[r + 1] {
            let c = idx[k];
            out_idx[next[c]] = r;
            out_val[next[c]] = val[k];
            next[c] += 1;
        }
    }
    (out_ptr, out_idx, out_val)
}
