//! Smoothness constants and ESO parameter vectors.
//!
//! For a partially separable `f = Σ_J f_J` the calculators below turn
//! Lipschitz data into step weights `v` such that
//!
//! ```text
//! E[f(x + h_[Ŝ])] <= f(x) + (E|Ŝ|/n) (<∇f(x), h> + ½ ||h||_v²)
//! ```
//!
//! holds for the matching sampling. `eso_bkbg` is the uncertified naive
//! choice `v = L` kept as a baseline.

use crate::blocks::BlockLayout;
use crate::io::SparseMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EsoError {
    #[error("block {0} has no nonzero data; its Lipschitz constant would be 0")]
    ZeroBlock(usize),
    #[error("tau = {tau} not in 1..={n}")]
    BadTau { tau: usize, n: usize },
    #[error("invalid smoothness data: {0}")]
    Invalid(String),
    #[error("power iteration did not converge in {iters} iterations (best estimate {best})")]
    NotConverged { best: f64, iters: usize },
    #[error("sigma is required for RT-D but was not computed or supplied")]
    MissingSigma,
    #[error("ESO {0} needs a tau-nice sampling")]
    NeedsTauNice(EsoSource),
}

/// Which construction (or baseline) produced a `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EsoSource {
    /// `(1 + (ω-1)(τ-1)/max(1,n-1)) L`
    RtP,
    /// `(1 + (σ-1)(τ-1)/max(1,n-1)) L`
    RtD,
    /// Element-wise constants, τ-nice.
    Fr,
    /// Element-wise constants, doubly uniform.
    Du,
    /// Sub-function constants; monotonic.
    Nc,
    /// `v = L`, not an ESO.
    Bkbg,
}

impl EsoSource {
    pub fn tag(self) -> &'static str {
        match self {
            EsoSource::RtP => "rt-p",
            EsoSource::RtD => "rt-d",
            EsoSource::Fr => "fr",
            EsoSource::Du => "du",
            EsoSource::Nc => "nc",
            EsoSource::Bkbg => "bkbg",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "rt-p" => EsoSource::RtP,
            "rt-d" => EsoSource::RtD,
            "fr" => EsoSource::Fr,
            "du" => EsoSource::Du,
            "nc" => EsoSource::Nc,
            "bkbg" => EsoSource::Bkbg,
            _ => return None,
        })
    }
}

impl fmt::Display for EsoSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsoParameter {
    pub v: Vec<f64>,
    pub monotonic: bool,
    pub source: EsoSource,
}

impl EsoParameter {
    /// Whether `v` comes with an ESO guarantee.
    pub fn certified(&self) -> bool {
        self.source != EsoSource::Bkbg
    }

    /// Explicit, user-supplied weights. Treated as certified RT-P-like data
    /// only by the caller's say-so; the flag records it as non-monotonic.
    pub fn explicit(v: Vec<f64>, source: EsoSource) -> Self {
        EsoParameter { v, monotonic: source == EsoSource::Nc, source }
    }
}

/// Lipschitz data of a partially separable `f = Σ_J f_J`.
///
/// `pattern[k]` is the sorted block support of sub-function `k`,
/// `lhat[k][t]` the constant of block `pattern[k][t]` in that sub-function
/// (row-support form: blocks outside the support have constant 0 and are not
/// stored), `ltilde[k]` its whole-function constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessData {
    pub n: usize,
    pub lipschitz: Vec<f64>,
    pub pattern: Vec<Vec<usize>>,
    pub ltilde: Vec<f64>,
    pub lhat: Vec<Vec<f64>>,
    pub omega: usize,
    /// `λ_max(D^{-1/2} AᵀA D^{-1/2})` with `D = diag(L)`; equals
    /// `λ_max(AᵀA)` when every column has unit norm.
    pub sigma: Option<f64>,
}

impl SmoothnessData {
    pub fn validate(&self) -> Result<(), EsoError> {
        if self.lipschitz.len() != self.n {
            return Err(EsoError::Invalid("lipschitz length differs from n".into()));
        }
        if let Some(i) = self.lipschitz.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(EsoError::ZeroBlock(i));
        }
        if self.pattern.len() != self.ltilde.len() || self.pattern.len() != self.lhat.len() {
            return Err(EsoError::Invalid("pattern / constant lengths differ".into()));
        }
        for (k, (j, lh)) in self.pattern.iter().zip(&self.lhat).enumerate() {
            if j.len() != lh.len() || j.is_empty() {
                return Err(EsoError::Invalid(format!("sub-function {k} has malformed support")));
            }
            if j.windows(2).any(|w| w[0] >= w[1]) || j.iter().any(|&i| i >= self.n) {
                return Err(EsoError::Invalid(format!("sub-function {k} support not sorted/in range")));
            }
            if lh.iter().any(|&c| c < 0.0) {
                return Err(EsoError::Invalid(format!("negative element constant in sub-function {k}")));
            }
        }
        let omega = self.pattern.iter().map(Vec::len).max().unwrap_or(0);
        if omega != self.omega || omega == 0 {
            return Err(EsoError::Invalid(format!("omega {} inconsistent with pattern ({omega})", self.omega)));
        }
        Ok(())
    }

    /// Multiplies every constant by `s > 0` (a scaled objective `s·f`).
    /// `sigma` is scale-free and is kept.
    pub fn scaled(mut self, s: f64) -> Self {
        for l in &mut self.lipschitz {
            *l *= s;
        }
        for l in &mut self.ltilde {
            *l *= s;
        }
        for row in &mut self.lhat {
            for l in row {
                *l *= s;
            }
        }
        self
    }

    /// Appends the supports and constants of another function on the same
    /// blocks (`f + g`): block constants and element constants add.
    pub fn merged(mut self, other: SmoothnessData) -> Self {
        assert_eq!(self.n, other.n);
        for (a, b) in self.lipschitz.iter_mut().zip(&other.lipschitz) {
            *a += b;
        }
        self.pattern.extend(other.pattern);
        self.ltilde.extend(other.ltilde);
        self.lhat.extend(other.lhat);
        self.omega = self.omega.max(other.omega);
        self.sigma = None;
        self
    }
}

/// Constants of `½||Ax - b||²` with singleton blocks and Euclidean norms:
/// `L_i` = squared column norms, `L̃_j` = squared row norms,
/// `L̂_{j,i} = a_{j,i}²`, one sub-function per nonzero row.
pub fn lipschitz_from_quadratic(a: &SparseMatrix) -> Result<SmoothnessData, EsoError> {
    let layout = BlockLayout::singletons(a.cols()).map_err(|e| EsoError::Invalid(e.to_string()))?;
    lipschitz_from_quadratic_blocks(a, &layout, None)
}

/// Block version: `A` has `N` columns grouped by `layout`, and block `i`
/// carries the diagonal metric `B_i` (`metric`, one entry per coordinate;
/// `None` for identity). Constants are taken with respect to `||·||_(i)`,
/// which amounts to working with `A B^{-1/2}`.
pub fn lipschitz_from_quadratic_blocks(
    a: &SparseMatrix,
    layout: &BlockLayout,
    metric: Option<&[f64]>,
) -> Result<SmoothnessData, EsoError> {
    if a.cols() != layout.dim() {
        return Err(EsoError::Invalid(format!(
            "matrix has {} columns, layout dimension {}",
            a.cols(),
            layout.dim()
        )));
    }
    let scaled;
    let a = match metric {
        Some(d) => {
            let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
            scaled = a.scale_cols(&s);
            &scaled
        }
        None => a,
    };
    let n = layout.n_blocks();

    let mut pattern = Vec::with_capacity(a.rows());
    let mut lhat = Vec::with_capacity(a.rows());
    let mut ltilde = Vec::with_capacity(a.rows());
    for r in 0..a.rows() {
        let (idx, val) = a.row(r);
        let mut blocks: Vec<usize> = Vec::new();
        let mut consts: Vec<f64> = Vec::new();
        for (&c, &v) in idx.iter().zip(val) {
            if v == 0.0 {
                continue;
            }
            let b = layout.block_of(c);
            // Columns are sorted, so equal blocks are adjacent.
            if blocks.last() == Some(&b) {
                *consts.last_mut().unwrap() += v * v;
            } else {
                blocks.push(b);
                consts.push(v * v);
            }
        }
        if blocks.is_empty() {
            continue;
        }
        ltilde.push(consts.iter().sum());
        pattern.push(blocks);
        lhat.push(consts);
    }

    let mut lipschitz = vec![0.0; n];
    for (i, l) in lipschitz.iter_mut().enumerate() {
        let r = layout.range(i);
        *l = if r.len() == 1 {
            a.col(r.start).1.iter().map(|v| v * v).sum()
        } else {
            block_gram_lambda_max(a, r)
        };
        if !(*l > 0.0) {
            return Err(EsoError::ZeroBlock(i));
        }
    }
    let omega = pattern.iter().map(Vec::len).max().unwrap_or(0);
    if omega == 0 {
        return Err(EsoError::Invalid("matrix has no nonzero entries".into()));
    }
    Ok(SmoothnessData { n, lipschitz, pattern, ltilde, lhat, omega, sigma: None })
}

fn block_gram_lambda_max(a: &SparseMatrix, cols: std::ops::Range<usize>) -> f64 {
    let k = cols.len();
    let start = cols.start;
    let mut gram = DMatrix::<f64>::zeros(k, k);
    // Dense per-row accumulation over the block's columns.
    let mut row_vals: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
    for c in cols.clone() {
        let (idx, val) = a.col(c);
        for (&r, &v) in idx.iter().zip(val) {
            row_vals.entry(r).or_default().push((c - start, v));
        }
    }
    for entries in row_vals.values() {
        for &(p, vp) in entries {
            for &(q, vq) in entries {
                gram[(p, q)] += vp * vq;
            }
        }
    }
    SymmetricEigen::new(gram).eigenvalues.max()
}

/// `λ_max` of the Gram matrix after scaling block `i` of `A B^{-1/2}` by
/// `L_i^{-1/2}`. This is the σ the RT-D factor expects.
pub fn normalized_sigma(
    a: &SparseMatrix,
    layout: &BlockLayout,
    metric: Option<&[f64]>,
    lipschitz: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<f64, EsoError> {
    let scale: Vec<f64> = (0..layout.dim())
        .map(|c| {
            let d = metric.map_or(1.0, |m| m[c]);
            1.0 / (d * lipschitz[layout.block_of(c)]).sqrt()
        })
        .collect();
    sigma_estimate(&a.scale_cols(&scale), tol, max_iters)
}

/// Largest eigenvalue of `AᵀA` by power iteration from a fixed-seed start.
///
/// Stops once the Rayleigh quotient `θ` has residual `||AᵀAu - θu|| <= tol·θ`.
pub fn sigma_estimate(a: &SparseMatrix, tol: f64, max_iters: usize) -> Result<f64, EsoError> {
    if a.nnz() == 0 || a.cols() == 0 {
        return Err(EsoError::Invalid("sigma of a zero matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_51C3A);
    let mut u: Vec<f64> = (0..a.cols()).map(|_| rng.gen_range(0.5..1.5)).collect();
    normalize(&mut u);
    let mut best = 0.0f64;
    for _ in 0..max_iters {
        let w = a.tr_mul_vec(&a.mul_vec(&u));
        let theta: f64 = u.iter().zip(&w).map(|(p, q)| p * q).sum();
        best = best.max(theta);
        let res: f64 = w.iter().zip(&u).map(|(wi, ui)| (wi - theta * ui).powi(2)).sum::<f64>().sqrt();
        if theta > 0.0 && res <= tol * theta {
            return Ok(theta);
        }
        let mut next = w;
        if normalize(&mut next) == 0.0 {
            // Start vector in the null space; restart from a fresh direction.
            next = (0..a.cols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalize(&mut next);
        }
        u = next;
    }
    Err(EsoError::NotConverged { best, iters: max_iters })
}

fn normalize(u: &mut [f64]) -> f64 {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in u.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

fn check_tau(tau: usize, n: usize) -> Result<(), EsoError> {
    if tau == 0 || tau > n {
        Err(EsoError::BadTau { tau, n })
    } else {
        Ok(())
    }
}

fn denom(n: usize) -> f64 {
    (n.max(2) - 1) as f64
}

pub fn rt_p_factor(omega: usize, tau: usize, n: usize) -> f64 {
    1.0 + (omega as f64 - 1.0) * (tau as f64 - 1.0) / denom(n)
}

/// RT-D factor; a value below 1 (possible only when σ < 1) is clamped to 1.
pub fn rt_d_factor(sigma: f64, tau: usize, n: usize) -> f64 {
    let f = 1.0 + (sigma - 1.0) * (tau as f64 - 1.0) / denom(n);
    if f < 1.0 {
        log::warn!("RT-D factor {f} < 1 (sigma = {sigma}); clamping to 1");
        1.0
    } else {
        f
    }
}

pub fn eso_rt_p(lipschitz: &[f64], omega: usize, tau: usize, n: usize) -> Result<EsoParameter, EsoError> {
    check_tau(tau, n)?;
    if omega == 0 {
        return Err(EsoError::Invalid("omega must be at least 1".into()));
    }
    let f = rt_p_factor(omega, tau, n);
    Ok(EsoParameter { v: lipschitz.iter().map(|l| f * l).collect(), monotonic: false, source: EsoSource::RtP })
}

pub fn eso_rt_d(lipschitz: &[f64], sigma: f64, tau: usize, n: usize) -> Result<EsoParameter, EsoError> {
    check_tau(tau, n)?;
    let f = rt_d_factor(sigma, tau, n);
    Ok(EsoParameter { v: lipschitz.iter().map(|l| f * l).collect(), monotonic: false, source: EsoSource::RtD })
}

/// Doubly uniform ESO from the cardinality moments `(E|Ŝ|, E|Ŝ|²)`.
pub fn eso_du(data: &SmoothnessData, moments: (f64, f64), n: usize) -> Result<EsoParameter, EsoError> {
    let (m1, m2) = moments;
    if !(m1 > 0.0) {
        return Err(EsoError::Invalid("E|S| must be positive".into()));
    }
    let spread = m2 / m1 - 1.0;
    let mut v = vec![0.0; data.n];
    for (support, consts) in data.pattern.iter().zip(&data.lhat) {
        let f = 1.0 + spread * (support.len() as f64 - 1.0) / denom(n);
        for (&i, &c) in support.iter().zip(consts) {
            v[i] += f * c;
        }
    }
    finish(v, false, EsoSource::Du)
}

/// τ-nice ESO from element-wise constants.
pub fn eso_fr(data: &SmoothnessData, tau: usize, n: usize) -> Result<EsoParameter, EsoError> {
    check_tau(tau, n)?;
    let mut v = vec![0.0; data.n];
    for (support, consts) in data.pattern.iter().zip(&data.lhat) {
        let f = 1.0 + (tau as f64 - 1.0) * (support.len() as f64 - 1.0) / denom(n);
        for (&i, &c) in support.iter().zip(consts) {
            v[i] += f * c;
        }
    }
    finish(v, false, EsoSource::Fr)
}

/// `ṽ_i = Σ_{J ∋ i} L̃_J`; independent of τ and monotonic.
pub fn eso_nc(data: &SmoothnessData, _n: usize) -> Result<EsoParameter, EsoError> {
    let mut v = vec![0.0; data.n];
    for (support, &lt) in data.pattern.iter().zip(&data.ltilde) {
        if !(lt > 0.0) {
            return Err(EsoError::Invalid("sub-function constant must be positive".into()));
        }
        for &i in support {
            v[i] += lt;
        }
    }
    finish(v, true, EsoSource::Nc)
}

/// `v = L`. Not an ESO for τ > 1; a solver using it may diverge.
pub fn eso_bkbg(lipschitz: &[f64]) -> EsoParameter {
    EsoParameter { v: lipschitz.to_vec(), monotonic: false, source: EsoSource::Bkbg }
}

fn finish(v: Vec<f64>, monotonic: bool, source: EsoSource) -> Result<EsoParameter, EsoError> {
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(EsoError::ZeroBlock(i));
    }
    Ok(EsoParameter { v, monotonic, source })
}

/// Dispatches on `source` for a given sampling.
pub fn build_eso(
    source: EsoSource,
    data: &SmoothnessData,
    sampling: &crate::sampling::SamplingSpec,
) -> Result<EsoParameter, EsoError> {
    let n = data.n;
    let tau = sampling.tau();
    match source {
        EsoSource::RtP => eso_rt_p(&data.lipschitz, data.omega, tau.ok_or(EsoError::NeedsTauNice(source))?, n),
        EsoSource::RtD => eso_rt_d(
            &data.lipschitz,
            data.sigma.ok_or(EsoError::MissingSigma)?,
            tau.ok_or(EsoError::NeedsTauNice(source))?,
            n,
        ),
        EsoSource::Fr => eso_fr(data, tau.ok_or(EsoError::NeedsTauNice(source))?, n),
        EsoSource::Du => eso_du(data, sampling.cardinality_moments(), n),
        EsoSource::Nc => eso_nc(data, n),
        EsoSource::Bkbg => Ok(eso_bkbg(&data.lipschitz)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_quadratic() {
        let d = lipschitz_from_quadratic(&SparseMatrix::identity(3)).unwrap();
        assert_eq!(d.lipschitz, vec![1.0; 3]);
        assert_eq!(d.ltilde, vec![1.0; 3]);
        assert_eq!(d.pattern, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(d.lhat, vec![vec![1.0]; 3]);
        assert_eq!(d.omega, 1);
        assert_eq!(eso_nc(&d, 3).unwrap().v, vec![1.0; 3]);
    }

    #[test]
    fn small_quadratic_hand_values() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let d = lipschitz_from_quadratic(&a).unwrap();
        assert_eq!(d.lipschitz, vec![1.0, 13.0]);
        assert_eq!(d.ltilde, vec![5.0, 9.0]);
        assert_eq!(d.omega, 2);
        d.validate().unwrap();
    }

    #[test]
    fn zero_column_rejected() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert_eq!(lipschitz_from_quadratic(&a).unwrap_err(), EsoError::ZeroBlock(1));
    }

    #[test]
    fn element_constants_sum_to_column_constants() {
        let a = SparseMatrix::from_dense(3, 3, &[1.0, -2.0, 0.0, 0.5, 0.0, 3.0, 0.0, 1.5, -1.0]);
        let d = lipschitz_from_quadratic(&a).unwrap();
        let mut sums = vec![0.0; 3];
        for (s, c) in d.pattern.iter().zip(&d.lhat) {
            for (&i, &v) in s.iter().zip(c) {
                sums[i] += v;
            }
        }
        for (s, l) in sums.iter().zip(&d.lipschitz) {
            assert_relative_eq!(s, l, max_relative = 1e-15);
        }
    }

    #[test]
    fn block_constants_use_block_gram() {
        // One block of two columns; gram [[2,1],[1,1]] has λ_max = (3+√5)/2.
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        let layout = BlockLayout::new(vec![2]).unwrap();
        let d = lipschitz_from_quadratic_blocks(&a, &layout, None).unwrap();
        assert_relative_eq!(d.lipschitz[0], (3.0 + 5f64.sqrt()) / 2.0, max_relative = 1e-12);
        assert_eq!(d.pattern, vec![vec![0], vec![0]]);
        assert_eq!(d.lhat, vec![vec![2.0], vec![1.0]]);

        // A diagonal metric rescales columns.
        let single = BlockLayout::singletons(2).unwrap();
        let d = lipschitz_from_quadratic_blocks(&a, &single, Some(&[2.0, 4.0])).unwrap();
        assert_relative_eq!(d.lipschitz[0], 1.0);
        assert_relative_eq!(d.lipschitz[1], 0.25);
    }

    #[test]
    fn rt_p_factors_from_the_experiments() {
        assert!((rt_p_factor(20, 512, 2000) - 5.856).abs() <= 1e-3);
        assert!((rt_p_factor(29881, 32, 29882) - 31.998).abs() <= 2e-3);
        assert!((rt_p_factor(29881, 256, 29882) - 255.991).abs() <= 2e-3);
        assert_eq!(rt_p_factor(7, 1, 10), 1.0);
        assert_eq!(eso_rt_p(&[2.0, 3.0], 5, 1, 2).unwrap().v, vec![2.0, 3.0]);
    }

    #[test]
    fn rt_d_factors_from_the_experiments() {
        assert!((rt_d_factor(10.48, 512, 2000) - 3.424).abs() <= 1e-3);
        assert!((rt_d_factor(287.273, 32, 29882) - 1.296).abs() <= 2e-3);
        assert!((rt_d_factor(287.273, 256, 29882) - 3.443).abs() <= 2e-3);
        assert_eq!(rt_d_factor(0.5, 10, 20), 1.0);
    }

    #[test]
    fn du_hand_example() {
        let d = SmoothnessData {
            n: 4,
            lipschitz: vec![1.0; 4],
            pattern: vec![vec![0, 1], vec![2, 3]],
            ltilde: vec![2.0, 2.0],
            lhat: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            omega: 2,
            sigma: None,
        };
        let v = eso_du(&d, (2.0, 5.0), 4).unwrap().v;
        for vi in v {
            assert_relative_eq!(vi, 1.5, max_relative = 1e-15);
        }
    }

    #[test]
    fn separable_du_is_lipschitz() {
        let d = lipschitz_from_quadratic(&SparseMatrix::from_dense(2, 2, &[2.0, 0.0, 0.0, 3.0])).unwrap();
        for m in [(1.0, 1.0), (3.0, 12.0), (0.5, 2.0)] {
            assert_eq!(eso_du(&d, m, 2).unwrap().v, d.lipschitz);
        }
    }

    #[test]
    fn fr_matches_rt_p_when_supports_have_size_omega() {
        let a = SparseMatrix::from_dense(3, 4, &[1.0, 2.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 3.0, 1.0]);
        let d = lipschitz_from_quadratic(&a).unwrap();
        assert!(d.pattern.iter().all(|j| j.len() == 2));
        for tau in 1..=4 {
            let fr = eso_fr(&d, tau, 4).unwrap().v;
            let rp = eso_rt_p(&d.lipschitz, d.omega, tau, 4).unwrap().v;
            for (a, b) in fr.iter().zip(&rp) {
                assert_relative_eq!(a, b, max_relative = 1e-14);
            }
        }
        assert_eq!(eso_fr(&d, 1, 4).unwrap().v, d.lipschitz);
    }

    #[test]
    fn nc_is_tau_free_and_monotonic() {
        let d = SmoothnessData {
            n: 3,
            lipschitz: vec![0.7; 3],
            pattern: vec![vec![0, 1, 2]],
            ltilde: vec![0.7],
            lhat: vec![vec![0.7; 3]],
            omega: 3,
            sigma: None,
        };
        let e = eso_nc(&d, 3).unwrap();
        assert_eq!(e.v, vec![0.7; 3]);
        assert!(e.monotonic);
        assert!(!eso_fr(&d, 2, 3).unwrap().monotonic);
    }

    #[test]
    fn bkbg_is_identity_and_uncertified() {
        let e = eso_bkbg(&[1.0, 2.0]);
        assert_eq!(e.v, vec![1.0, 2.0]);
        assert!(!e.certified());
        assert!(!e.monotonic);
    }

    #[test]
    fn sigma_small_cases() {
        assert_relative_eq!(sigma_estimate(&SparseMatrix::identity(3), 1e-10, 100).unwrap(), 1.0);
        let d = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert_relative_eq!(sigma_estimate(&d, 1e-10, 1000).unwrap(), 4.0, max_relative = 1e-9);
    }

    #[test]
    fn sigma_reports_non_convergence() {
        // Two nearly equal eigenvalues converge slowly.
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, 1.0 + 1e-9]);
        match sigma_estimate(&a, 1e-14, 3) {
            Err(EsoError::NotConverged { best, iters: 3 }) => assert!(best > 0.99),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tags_round_trip() {
        for s in [EsoSource::RtP, EsoSource::RtD, EsoSource::Fr, EsoSource::Du, EsoSource::Nc, EsoSource::Bkbg] {
            assert_eq!(EsoSource::from_tag(s.tag()), Some(s));
        }
        assert_eq!(EsoSource::from_tag("xyz"), None);
    }
}
