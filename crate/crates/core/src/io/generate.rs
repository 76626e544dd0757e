//! Synthetic sparse instances.

use super::{IoError, SparseMatrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Fraction of nonzeros in the planted solution.
const PLANTED_DENSITY: f64 = 0.1;
const NOISE_STD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresInstance {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// Planted solution used to build `b`.
    pub x_true: Vec<f64>,
}

/// Random sparse least-squares instance with unit-norm columns.
///
/// Each row draws its support size uniformly from `1..=omega_max` (capped at
/// `n`) and its columns uniformly without replacement. Empty columns are
/// repaired before values are drawn: an entry is added to a random row that
/// still has room, or, when every row is full, a random entry is moved out
/// of a column that has more than one. Values are uniform on `(0, 1)` and
/// every column is then scaled to unit L2 norm. `b = A x̄ + 0.01·noise` with a
/// sparse standard normal `x̄`.
pub fn gen_least_squares(m: usize, n: usize, omega_max: usize, seed: u64) -> Result<LeastSquaresInstance, IoError> {
    if m == 0 || n == 0 || omega_max == 0 {
        return Err(IoError::Invalid("m, n and omega must be positive".into()));
    }
    let omega = omega_max.min(n);
    if m * omega < n {
        return Err(IoError::Invalid(format!("{m} rows with at most {omega} entries cannot cover {n} columns")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let k = rng.gen_range(1..=omega);
            sample(&mut rng, n, k).into_vec()
        })
        .collect();
    let mut count = vec![0usize; n];
    for r in &rows {
        for &c in r {
            count[c] += 1;
        }
    }
    for c in 0..n {
        if count[c] > 0 {
            continue;
        }
        let open: Vec<usize> = (0..m).filter(|&r| rows[r].len() < omega).collect();
        if !open.is_empty() {
            rows[open[rng.gen_range(0..open.len())]].push(c);
        } else {
            let movable: Vec<(usize, usize)> = (0..m)
                .flat_map(|r| (0..rows[r].len()).map(move |t| (r, t)))
                .filter(|&(r, t)| count[rows[r][t]] > 1)
                .collect();
            let (r, t) = movable[rng.gen_range(0..movable.len())];
            count[rows[r][t]] -= 1;
            rows[r][t] = c;
        }
        count[c] = 1;
    }

    let mut trips = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    for (r, cols) in rows.iter_mut().enumerate() {
        cols.sort_unstable();
        for &c in cols.iter() {
            trips.push((r, c, rng.gen_range(f64::EPSILON..1.0)));
        }
    }
    let raw = SparseMatrix::from_triplets(m, n, &trips)?;
    let scale: Vec<f64> = raw.col_sq_norms().iter().map(|s| 1.0 / s.sqrt()).collect();
    let a = raw.scale_cols(&scale);

    let mut x_true = vec![0.0; n];
    let k = ((n as f64 * PLANTED_DENSITY).round() as usize).max(1);
    for c in sample(&mut rng, n, k).into_vec() {
        x_true[c] = rng.sample(StandardNormal);
    }
    let mut b = a.mul_vec(&x_true);
    for bi in &mut b {
        *bi += NOISE_STD * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(LeastSquaresInstance { a, b, x_true })
}

/// Random sparse binary classification data with unit-norm rows.
///
/// Labels come from a planted linear separator; `flip` is the fraction of
/// labels flipped afterwards so the data is not separable.
pub fn gen_classification(
    samples: usize,
    features: usize,
    density: f64,
    flip: f64,
    seed: u64,
) -> Result<(SparseMatrix, Vec<f64>), IoError> {
    if samples == 0 || features == 0 || !(density > 0.0 && density <= 1.0) || !(0.0..=1.0).contains(&flip) {
        return Err(IoError::Invalid("bad classification generator arguments".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
    let mut trips = Vec::new();
    let mut labels = Vec::with_capacity(samples);
    for r in 0..samples {
        let k = ((features as f64 * density).round() as usize).clamp(1, features);
        let mut cols = sample(&mut rng, features, k).into_vec();
        cols.sort_unstable();
        let vals: Vec<f64> = cols.iter().map(|_| rng.sample(StandardNormal)).collect();
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut margin = 0.0;
        for (&c, &v) in cols.iter().zip(&vals) {
            trips.push((r, c, v / norm));
            margin += w[c] * v;
        }
        let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.gen::<f64>() < flip {
            y = -y;
        }
        labels.push(y);
    }
    Ok((SparseMatrix::from_triplets(samples, features, &trips)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_have_unit_norm() {
        let inst = gen_least_squares(300, 80, 10, 4).unwrap();
        for s in inst.a.col_sq_norms() {
            assert!((s.sqrt() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn row_support_bounded_by_omega() {
        let inst = gen_least_squares(100, 200, 3, 1).unwrap();
        for r in 0..100 {
            let k = inst.a.row(r).0.len();
            assert!((1..=3).contains(&k));
        }
    }

    #[test]
    fn separable_when_omega_is_one() {
        let inst = gen_least_squares(40, 30, 1, 2).unwrap();
        for r in 0..40 {
            assert_eq!(inst.a.row(r).0.len(), 1);
        }
        assert!(inst.a.col_sq_norms().iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn repair_moves_entries_when_rows_are_full() {
        // Exactly as many rows as columns with one entry each.
        let inst = gen_least_squares(25, 25, 1, 3).unwrap();
        assert_eq!(inst.a.nnz(), 25);
        assert!(inst.a.col_sq_norms().iter().all(|&s| s > 0.0));
    }

    #[test]
    fn infeasible_cover_rejected() {
        assert!(gen_least_squares(3, 10, 2, 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(gen_least_squares(60, 20, 5, 9).unwrap(), gen_least_squares(60, 20, 5, 9).unwrap());
        assert_ne!(gen_least_squares(60, 20, 5, 9).unwrap(), gen_least_squares(60, 20, 5, 10).unwrap());
    }

    #[test]
    fn classification_rows_are_normalized() {
        let (x, y) = gen_classification(100, 30, 0.2, 0.05, 5).unwrap();
        assert!(x.row_sq_norms().iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!(y.iter().all(|&l| l == 1.0 || l == -1.0));
    }
}
