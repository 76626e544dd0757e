//! Block decomposition of the coordinate space and the weighted norm pair.
//!
//! A vector `x` of length `N` is stored flat; block `i` is the contiguous
//! range `offsets[i]..offsets[i + 1]`. Blocks are indexed from zero.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("block index {index} out of range for {n} blocks")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid norm data: {0}")]
    InvalidNorms(String),
}

/// Partition of `{0..N}` into `n` contiguous, nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Result<Self, BlockError> {
        if sizes.is_empty() {
            return Err(BlockError::InvalidLayout("at least one block required".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(BlockError::InvalidLayout(format!("block {i} is empty")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for &s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(BlockLayout { sizes, offsets })
    }

    /// One coordinate per block.
    pub fn singletons(n: usize) -> Result<Self, BlockError> {
        Self::new(vec![1; n])
    }

    /// Consecutive blocks of `size` coordinates; the last block takes the remainder.
    pub fn uniform(dim: usize, size: usize) -> Result<Self, BlockError> {
        if size == 0 || dim == 0 {
            return Err(BlockError::InvalidLayout("zero block size or dimension".into()));
        }
        let mut sizes = vec![size; dim / size];
        if dim % size != 0 {
            sizes.push(dim % size);
        }
        Self::new(sizes)
    }

    /// Number of blocks `n`.
    #[inline]
    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Ambient dimension `N`.
    #[inline]
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn is_singleton(&self) -> bool {
        self.sizes.iter().all(|&s| s == 1)
    }

    /// Block that owns coordinate `c`.
    pub fn block_of(&self, c: usize) -> usize {
        match self.offsets.binary_search(&c) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn check_index(&self, i: usize) -> Result<(), BlockError> {
        if i >= self.n_blocks() {
            Err(BlockError::IndexOutOfRange { index: i, n: self.n_blocks() })
        } else {
            Ok(())
        }
    }

    fn check_len(&self, len: usize) -> Result<(), BlockError> {
        if len != self.dim() {
            Err(BlockError::DimensionMismatch { expected: self.dim(), got: len })
        } else {
            Ok(())
        }
    }
}

/// Block `i` of `x`.
pub fn block_view<'a>(x: &'a [f64], i: usize, layout: &BlockLayout) -> Result<&'a [f64], BlockError> {
    layout.check_len(x.len())?;
    layout.check_index(i)?;
    Ok(&x[layout.range(i)])
}

/// Mutable block `i` of `x`; writes go straight into `x`.
pub fn block_view_mut<'a>(
    x: &'a mut [f64],
    i: usize,
    layout: &BlockLayout,
) -> Result<&'a mut [f64], BlockError> {
    layout.check_len(x.len())?;
    layout.check_index(i)?;
    Ok(&mut x[layout.range(i)])
}

/// Per-block metric `B_i` (positive diagonal, stored per coordinate) and
/// the block weights `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorms {
    diag: Vec<f64>,
    v: Vec<f64>,
}

impl BlockNorms {
    /// `B_i = I` for every block.
    pub fn identity(layout: &BlockLayout, v: Vec<f64>) -> Result<Self, BlockError> {
        Self::diagonal(layout, vec![1.0; layout.dim()], v)
    }

    pub fn diagonal(layout: &BlockLayout, diag: Vec<f64>, v: Vec<f64>) -> Result<Self, BlockError> {
        layout.check_len(diag.len())?;
        if v.len() != layout.n_blocks() {
            return Err(BlockError::DimensionMismatch { expected: layout.n_blocks(), got: v.len() });
        }
        if let Some(c) = diag.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(BlockError::InvalidNorms(format!("B diagonal entry {c} is not positive")));
        }
        if let Some(i) = v.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(BlockError::InvalidNorms(format!("weight v[{i}] is not positive")));
        }
        Ok(BlockNorms { diag, v })
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Diagonal of the block metrics, one entry per coordinate.
    pub fn metric(&self) -> &[f64] {
        &self.diag
    }
}

/// `||x||_v^2 = sum_i v_i <B_i x_i, x_i>`
pub fn weighted_norm_sq(x: &[f64], norms: &BlockNorms, layout: &BlockLayout) -> Result<f64, BlockError> {
    layout.check_len(x.len())?;
    Ok((0..layout.n_blocks())
        .map(|i| {
            let r = layout.range(i);
            let q: f64 = x[r.clone()].iter().zip(&norms.diag[r]).map(|(a, d)| d * a * a).sum();
            norms.v[i] * q
        })
        .sum())
}

/// `(||y||_v^*)^2 = sum_i (1/v_i) <B_i^{-1} y_i, y_i>`
pub fn dual_norm_sq(y: &[f64], norms: &BlockNorms, layout: &BlockLayout) -> Result<f64, BlockError> {
    layout.check_len(y.len())?;
    Ok((0..layout.n_blocks())
        .map(|i| {
            let r = layout.range(i);
            let q: f64 = y[r.clone()].iter().zip(&norms.diag[r]).map(|(a, d)| a * a / d).sum();
            q / norms.v[i]
        })
        .sum())
}

/// Copy of `x` with every block outside `subset` zeroed. `subset` holds
/// block indices; an empty subset yields the zero vector.
pub fn project_blocks(x: &[f64], subset: &[usize], layout: &BlockLayout) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for &i in subset {
        let r = layout.range(i);
        out[r.clone()].copy_from_slice(&x[r]);
    }
    out
}
