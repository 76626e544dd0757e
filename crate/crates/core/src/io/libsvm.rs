//! LibSVM / SVMlight text format: `label idx:val idx:val ...`, 1-based
//! strictly increasing indices.

use super::{fmt_f64, IoError, SparseMatrix};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, Default)]
pub struct LibsvmOptions {
    /// Scale every row to unit L2 norm (all-zero rows are left alone).
    pub normalize_rows: bool,
    /// Force at least this many columns; the default is the largest index seen.
    pub n_features: Option<usize>,
}

/// Reads a classification file. Labels must be in `{-1, 0, +1}`; `0` maps to `-1`.
pub fn parse_libsvm(path: &Path, opts: LibsvmOptions) -> Result<(SparseMatrix, Vec<f64>), IoError> {
    parse_libsvm_str(&fs::read_to_string(path)?, opts)
}

pub fn parse_libsvm_str(text: &str, opts: LibsvmOptions) -> Result<(SparseMatrix, Vec<f64>), IoError> {
    let (m, targets, lines) = parse_inner(text, opts)?;
    let labels = targets
        .into_iter()
        .zip(lines)
        .map(|(y, line)| match y {
            y if y == 1.0 => Ok(1.0),
            y if y == -1.0 || y == 0.0 => Ok(-1.0),
            y => Err(IoError::Parse { line, msg: format!("label {y} not in {{-1, 0, +1}}") }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((m, labels))
}

/// Reads a file keeping real-valued targets (regression data).
pub fn parse_libsvm_raw(path: &Path, opts: LibsvmOptions) -> Result<(SparseMatrix, Vec<f64>), IoError> {
    let (m, targets, _) = parse_inner(&fs::read_to_string(path)?, opts)?;
    Ok((m, targets))
}

fn parse_inner(text: &str, opts: LibsvmOptions) -> Result<(SparseMatrix, Vec<f64>, Vec<usize>), IoError> {
    let mut targets = Vec::new();
    let mut lines = Vec::new();
    let mut row_ptr = vec![0usize];
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    let mut max_col = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| IoError::Parse { line, msg };
        let mut tokens = content.split_whitespace();
        let label = tokens.next().unwrap();
        let y: f64 = label.parse().map_err(|_| err(format!("bad label {label:?}")))?;
        if !y.is_finite() {
            return Err(err(format!("non-finite label {label:?}")));
        }
        let start = vals.len();
        let mut prev = 0usize;
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            let i: usize = i.parse().map_err(|_| err(format!("bad index {i:?}")))?;
            let v: f64 = v.parse().map_err(|_| err(format!("bad value {v:?}")))?;
            if i == 0 {
                return Err(err("indices are 1-based".into()));
            }
            if i == prev {
                return Err(err(format!("duplicate index {i}")));
            }
            if i < prev {
                return Err(err(format!("index {i} after {prev}; indices must increase")));
            }
            if !v.is_finite() {
                return Err(err(format!("non-finite value at index {i}")));
            }
            prev = i;
            col_idx.push(i - 1);
            vals.push(v);
        }
        max_col = max_col.max(prev);
        if opts.normalize_rows {
            let norm = vals[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                vals[start..].iter_mut().for_each(|v| *v /= norm);
            }
        }
        row_ptr.push(vals.len());
        targets.push(y);
        lines.push(line);
    }
    if targets.is_empty() {
        return Err(IoError::Empty);
    }
    let cols = match opts.n_features {
        Some(n) if n < max_col => {
            return Err(IoError::Shape(format!("index {max_col} exceeds requested {n} features")))
        }
        Some(n) => n,
        None => max_col,
    };
    let m = SparseMatrix::from_csr(targets.len(), cols, row_ptr, col_idx, vals)?;
    Ok((m, targets, lines))
}

/// Writes rows of `m` with their targets. Labels `±1` are written as `+1`/`-1`,
/// other targets and all values with 17 significant digits.
pub fn write_libsvm(path: &Path, m: &SparseMatrix, targets: &[f64]) -> Result<(), IoError> {
    if targets.len() != m.rows() {
        return Err(IoError::Shape(format!("{} targets for {} rows", targets.len(), m.rows())));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (r, &y) in targets.iter().enumerate() {
        let label = match y {
            y if y == 1.0 => "+1".to_string(),
            y if y == -1.0 => "-1".to_string(),
            y => fmt_f64(y),
        };
        write!(w, "{label}")?;
        let (idx, val) = m.row(r);
        for (&c, &v) in idx.iter().zip(val) {
            write!(w, " {}:{}", c + 1, fmt_f64(v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// One value per line.
pub fn write_vector_csv(path: &Path, values: &[f64]) -> Result<(), IoError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for &v in values {
        writeln!(w, "{}", fmt_f64(v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>, IoError> {
    fs::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| IoError::Parse { line: i + 1, msg: format!("bad number {l:?}") })
        })
        .collect()
}
