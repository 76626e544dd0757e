//! Data ingestion, synthetic instances and CSV serialization.

mod generate;
mod libsvm;
mod sparse;
mod trace;

pub use generate::{gen_classification, gen_least_squares, LeastSquaresInstance};
pub use libsvm::{
    parse_libsvm, parse_libsvm_raw, parse_libsvm_str, read_vector_csv, write_libsvm, write_vector_csv,
    LibsvmOptions,
};
pub use sparse::SparseMatrix;
pub use trace::{
    log_buckets, read_trace_csv, write_trace_csv, write_v_histogram, TraceRecord, TRACE_HEADER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("input contains no data")]
    Empty,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for IoError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (IoError::Parse { line: a, msg: m }, IoError::Parse { line: b, msg: n }) => a == b && m == n,
            (IoError::Empty, IoError::Empty) => true,
            (IoError::Shape(a), IoError::Shape(b)) => a == b,
            (IoError::Invalid(a), IoError::Invalid(b)) => a == b,
            (IoError::Io(a), IoError::Io(b)) => a.kind() == b.kind(),
            _ => false,
        }
    }
}

/// Float formatting used by every writer: 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
