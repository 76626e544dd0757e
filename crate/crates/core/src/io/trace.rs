//! CSV serialization of solver traces and of `v` histograms.

use super::{fmt_f64, IoError};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const TRACE_HEADER: &str = "k,F,gap,hnorm2,ns";

/// One trace row. `f` is `F(x_k)` (for the SVM dual, `-D(x_k)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: u64,
    pub f: f64,
    pub gap: Option<f64>,
    /// `||h(x_k)||_v²`
    pub hnorm2: f64,
    /// Wall-clock nanoseconds since the start of the run (0 when untimed).
    pub ns: u64,
}

fn write_records<W: Write>(mut w: W, records: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        let gap = r.gap.map(fmt_f64).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", r.k, fmt_f64(r.f), gap, fmt_f64(r.hnorm2), r.ns)?;
    }
    w.flush()
}

pub fn write_trace_csv(records: &[TraceRecord], path: &Path) -> Result<(), IoError> {
    write_records(BufWriter::new(fs::File::create(path)?), records)?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRACE_HEADER => {}
        _ => return Err(IoError::Parse { line: 1, msg: format!("expected header {TRACE_HEADER}") }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let err = |msg: &str| IoError::Parse { line: i + 1, msg: msg.to_string() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err("expected 5 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        out.push(TraceRecord {
            k: f[0].parse().map_err(|_| err("bad k"))?,
            f: num(f[1])?,
            gap: if f[2].is_empty() { None } else { Some(num(f[2])?) },
            hnorm2: num(f[3])?,
            ns: f[4].parse().map_err(|_| err("bad ns"))?,
        });
    }
    Ok(out)
}

/// Log-spaced bucket edges over `[min v, max v]` with per-bucket counts.
/// Constant `v` gives a single degenerate bucket.
pub fn log_buckets(v: &[f64], buckets: usize) -> Result<Vec<(f64, f64, usize)>, IoError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    if buckets == 0 {
        return Err(IoError::Invalid("need at least one bucket".into()));
    }
    if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(IoError::Invalid("histogram values must be positive and finite".into()));
    }
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(0.0, f64::max);
    if lo == hi {
        return Ok(vec![(lo, hi, v.len())]);
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / buckets as f64;
    let mut counts = vec![0usize; buckets];
    for &x in v {
        let b = (((x.ln() - llo) / width) as usize).min(buckets - 1);
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| {
            let a = if b == 0 { lo } else { (llo + b as f64 * width).exp() };
            let z = if b + 1 == buckets { hi } else { (llo + (b + 1) as f64 * width).exp() };
            (a, z, c)
        })
        .collect())
}

pub fn write_v_histogram(v: &[f64], buckets: usize, path: &Path) -> Result<(), IoError> {
    let rows = log_buckets(v, buckets)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "bucket_lo,bucket_hi,count")?;
    for (a, z, c) in rows {
        writeln!(w, "{},{},{c}", fmt_f64(a), fmt_f64(z))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace_csv(&[], &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "k,F,gap,hnorm2,ns\n");
        assert!(read_trace_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn constant_v_single_bucket() {
        assert_eq!(log_buckets(&[2.0; 5], 10).unwrap(), vec![(2.0, 2.0, 5)]);
    }

    #[test]
    fn buckets_cover_range() {
        let v = [1.0, 10.0, 100.0, 3.0, 30.0];
        let b = log_buckets(&v, 2).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].0, 1.0);
        assert_eq!(b[1].1, 100.0);
        assert_eq!(b.iter().map(|t| t.2).sum::<usize>(), 5);
        assert_eq!(b[1].2, 3);
    }
}
