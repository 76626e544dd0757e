//! Composite objectives `F = f + Ψ` with incremental residual state.
//!
//! The smooth part keeps a residual that makes a block gradient cost
//! `O(nnz(block))`: `r = Ax - b` for least squares, the primal vector `w(x)`
//! for the SVM dual. Every method that takes a state expects it to be
//! consistent with the `x` passed alongside it.

mod regularizer;

pub use regularizer::{block_prox, Regularizer};

use crate::blocks::{self, BlockError, BlockLayout, BlockNorms};
use crate::eso::{self, EsoError, SmoothnessData};
use crate::io::SparseMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Blocks(#[from] BlockError),
    #[error(transparent)]
    Eso(#[from] EsoError),
}

/// The smooth part `f`.
#[derive(Debug, Clone)]
pub enum SmoothPart {
    /// `½ ||Ax - b||²`
    LeastSquares { a: SparseMatrix, b: Vec<f64> },
    /// Negated SVM dual `-D(x) = (1/(2λN²)) ||Σ x_i y_i a_i||² - (1/N) Σ x_i`.
    /// `signed` holds the rows `y_i a_i`.
    SvmDual { features: SparseMatrix, labels: Vec<f64>, lambda: f64, signed: SparseMatrix },
    /// `Σ_{j=1..m} log(1 + exp(-x + ζ j))` on a single coordinate.
    ToyLogistic { m: usize, zeta: f64 },
}

/// Incremental quantities kept alongside `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualState {
    /// `r = Ax - b`
    Residual(Vec<f64>),
    /// `w(x) = (1/(λN)) Σ x_i y_i a_i`
    Primal(Vec<f64>),
    Stateless,
}

impl ResidualState {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            ResidualState::Residual(r) | ResidualState::Primal(r) => r,
            ResidualState::Stateless => &[],
        }
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        match self {
            ResidualState::Residual(r) | ResidualState::Primal(r) => r,
            ResidualState::Stateless => &mut [],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub smooth: SmoothPart,
    pub layout: BlockLayout,
    /// Diagonal of the block metrics `B_i`, one entry per coordinate.
    pub metric: Vec<f64>,
    pub regularizers: Vec<Regularizer>,
    /// Strong convexity of `f` w.r.t. `||·||_v`, when known.
    pub mu_f: Option<f64>,
    /// Strong convexity of `Ψ` w.r.t. `||·||_v`, when known.
    pub mu_psi: Option<f64>,
}

impl CompositeProblem {
    pub fn new(
        smooth: SmoothPart,
        layout: BlockLayout,
        metric: Option<Vec<f64>>,
        regularizers: Vec<Regularizer>,
    ) -> Result<Self, ModelError> {
        let dim = layout.dim();
        let expected = match &smooth {
            SmoothPart::LeastSquares { a, b } => {
                if a.rows() != b.len() {
                    return Err(ModelError::Dimension(format!("A has {} rows, b has {}", a.rows(), b.len())));
                }
                a.cols()
            }
            SmoothPart::SvmDual { features, labels, lambda, .. } => {
                if features.rows() != labels.len() {
                    return Err(ModelError::Dimension("one label per sample required".into()));
                }
                if !(*lambda > 0.0) {
                    return Err(ModelError::Invalid("SVM lambda must be positive".into()));
                }
                if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(ModelError::Invalid("SVM labels must be ±1".into()));
                }
                features.rows()
            }
            SmoothPart::ToyLogistic { m, .. } => {
                if *m == 0 {
                    return Err(ModelError::Invalid("toy model needs m >= 1".into()));
                }
                1
            }
        };
        if expected != dim {
            return Err(ModelError::Dimension(format!("data dimension {expected}, layout dimension {dim}")));
        }
        if regularizers.len() != layout.n_blocks() {
            return Err(ModelError::Dimension("one regularizer per block required".into()));
        }
        for r in &regularizers {
            r.validate().map_err(ModelError::Invalid)?;
        }
        let metric = metric.unwrap_or_else(|| vec![1.0; dim]);
        if metric.len() != dim || metric.iter().any(|&d| !(d > 0.0)) {
            return Err(ModelError::Invalid("metric must be positive, one entry per coordinate".into()));
        }
        if let SmoothPart::SvmDual { .. } = smooth {
            if regularizers.iter().any(|r| *r != (Regularizer::Box { lo: 0.0, hi: 1.0 })) {
                return Err(ModelError::Invalid("SVM dual requires the [0,1] box".into()));
            }
        }
        Ok(CompositeProblem { smooth, layout, metric, regularizers, mu_f: None, mu_psi: None })
    }

    /// Least squares on singleton blocks with one regularizer for all coordinates.
    pub fn least_squares(a: SparseMatrix, b: Vec<f64>, reg: Regularizer) -> Result<Self, ModelError> {
        let layout = BlockLayout::singletons(a.cols())?;
        let regs = vec![reg; layout.n_blocks()];
        Self::new(SmoothPart::LeastSquares { a, b }, layout, None, regs)
    }

    /// SVM dual in minimization form on `[0,1]^N`; `features` has one sample per row.
    pub fn svm_dual(features: SparseMatrix, labels: Vec<f64>, lambda: f64) -> Result<Self, ModelError> {
        let layout = BlockLayout::singletons(features.rows())?;
        if features.rows() != labels.len() {
            return Err(ModelError::Dimension("one label per sample required".into()));
        }
        let signed = features.scale_rows(&labels);
        let regs = vec![Regularizer::Box { lo: 0.0, hi: 1.0 }; layout.n_blocks()];
        Self::new(SmoothPart::SvmDual { features, labels, lambda, signed }, layout, None, regs)
    }

    /// One-coordinate logistic sum whose sub-functions are individually
    /// `¼`-smooth while the sum is only about `¼`-smooth overall.
    pub fn toy_logistic(m: usize, zeta: f64) -> Result<Self, ModelError> {
        Self::new(
            SmoothPart::ToyLogistic { m, zeta },
            BlockLayout::singletons(1)?,
            None,
            vec![Regularizer::Zero],
        )
    }

    pub fn with_strong_convexity(mut self, mu_f: f64, mu_psi: f64) -> Self {
        self.mu_f = Some(mu_f);
        self.mu_psi = Some(mu_psi);
        self
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn n_blocks(&self) -> usize {
        self.layout.n_blocks()
    }

    pub fn norms(&self, v: &[f64]) -> Result<BlockNorms, ModelError> {
        Ok(BlockNorms::diagonal(&self.layout, self.metric.clone(), v.to_vec())?)
    }

    fn check_x(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::Dimension(format!("x has length {}, expected {}", x.len(), self.dim())));
        }
        Ok(())
    }

    /// State computed from scratch.
    pub fn init_state(&self, x: &[f64]) -> ResidualState {
        match &self.smooth {
            SmoothPart::LeastSquares { a, b } => {
                let mut r = a.mul_vec(x);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= bi;
                }
                ResidualState::Residual(r)
            }
            SmoothPart::SvmDual { signed, lambda, .. } => {
                let scale = 1.0 / (lambda * x.len() as f64);
                let mut w = signed.tr_mul_vec(x);
                for wi in &mut w {
                    *wi *= scale;
                }
                ResidualState::Primal(w)
            }
            SmoothPart::ToyLogistic { .. } => ResidualState::Stateless,
        }
    }

    /// Largest relative deviation of `state` from a fresh recomputation.
    pub fn state_drift(&self, x: &[f64], state: &ResidualState) -> f64 {
        let fresh = self.init_state(x);
        let (a, b) = (state.as_slice(), fresh.as_slice());
        let scale = b.iter().map(|v| v.abs()).fold(1e-300, f64::max);
        a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / scale
    }

    /// `∇_i f(x)` written into `out` (length `N_i`).
    pub fn block_gradient(&self, x: &[f64], state: &ResidualState, i: usize, out: &mut [f64]) {
        let range = self.layout.range(i);
        debug_assert_eq!(out.len(), range.len());
        match (&self.smooth, state) {
            (SmoothPart::LeastSquares { a, .. }, ResidualState::Residual(r)) => {
                for (o, c) in out.iter_mut().zip(range) {
                    let (idx, val) = a.col(c);
                    *o = idx.iter().zip(val).map(|(&j, &v)| v * r[j]).sum();
                }
            }
            (SmoothPart::SvmDual { signed, .. }, ResidualState::Primal(w)) => {
                let inv_n = 1.0 / x.len() as f64;
                for (o, c) in out.iter_mut().zip(range) {
                    let (idx, val) = signed.row(c);
                    let dot: f64 = idx.iter().zip(val).map(|(&k, &v)| v * w[k]).sum();
                    *o = inv_n * (dot - 1.0);
                }
            }
            (SmoothPart::ToyLogistic { m, zeta }, _) => {
                out[0] = toy_derivatives(*m, *zeta, x[0]).1;
            }
            _ => panic!("residual state does not match the smooth part"),
        }
    }

    pub fn gradient(&self, x: &[f64], state: &ResidualState) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for i in 0..self.n_blocks() {
            let r = self.layout.range(i);
            self.block_gradient(x, state, i, &mut g[r]);
        }
        g
    }

    /// `f(x)`
    pub fn smooth_value(&self, x: &[f64], state: &ResidualState) -> f64 {
        match (&self.smooth, state) {
            (SmoothPart::LeastSquares { .. }, ResidualState::Residual(r)) => {
                0.5 * r.iter().map(|v| v * v).sum::<f64>()
            }
            (SmoothPart::SvmDual { lambda, .. }, ResidualState::Primal(w)) => {
                let nw: f64 = w.iter().map(|v| v * v).sum();
                0.5 * lambda * nw - x.iter().sum::<f64>() / x.len() as f64
            }
            (SmoothPart::ToyLogistic { m, zeta }, _) => toy_derivatives(*m, *zeta, x[0]).0,
            _ => panic!("residual state does not match the smooth part"),
        }
    }

    /// `Ψ(x)`
    pub fn regularizer_value(&self, x: &[f64]) -> f64 {
        (0..self.n_blocks())
            .map(|i| self.regularizers[i].value(&x[self.layout.range(i)]))
            .sum()
    }

    /// `F(x) = f(x) + Ψ(x)`
    pub fn function_value(&self, x: &[f64], state: &ResidualState) -> f64 {
        let psi = self.regularizer_value(x);
        if psi == f64::INFINITY {
            return f64::INFINITY;
        }
        self.smooth_value(x, state) + psi
    }

    /// `F(x)` from scratch.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.function_value(x, &self.init_state(x))
    }

    /// Adds `delta` to block `i` of `x` and updates the state incrementally.
    pub fn apply_block(&self, x: &mut [f64], state: &mut ResidualState, i: usize, delta: &[f64]) {
        let range = self.layout.range(i);
        let slots = state.as_mut_slice();
        self.for_each_state_delta(range.start, delta, |j, d| slots[j] += d);
        for (xc, d) in x[range].iter_mut().zip(delta) {
            *xc += d;
        }
    }

    /// Calls `add(j, amount)` for each state entry `j` touched by moving the
    /// coordinates starting at `start` by `delta`.
    pub(crate) fn for_each_state_delta<F: FnMut(usize, f64)>(&self, start: usize, delta: &[f64], mut add: F) {
        match &self.smooth {
            SmoothPart::LeastSquares { a, .. } => {
                for (k, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let (idx, val) = a.col(start + k);
                    for (&j, &v) in idx.iter().zip(val) {
                        add(j, v * d);
                    }
                }
            }
            SmoothPart::SvmDual { signed, lambda, .. } => {
                let scale = 1.0 / (lambda * signed.rows() as f64);
                for (k, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let (idx, val) = signed.row(start + k);
                    for (&j, &v) in idx.iter().zip(val) {
                        add(j, scale * d * v);
                    }
                }
            }
            SmoothPart::ToyLogistic { .. } => {}
        }
    }

    /// `x ← x + Σ_{i∈S} U_i h_i`, where `h` is a full-length vector and only
    /// the blocks in `subset` are read. Blocks are applied in the order given.
    pub fn apply_update(&self, x: &mut [f64], state: &mut ResidualState, subset: &[usize], h: &[f64]) {
        for &i in subset {
            let r = self.layout.range(i);
            self.apply_block(x, state, i, &h[r]);
        }
    }

    /// Block update `h_i(x)` for weight `v_i`, written into `out`.
    pub fn block_update(&self, x: &[f64], state: &ResidualState, v_i: f64, i: usize, out: &mut [f64]) {
        let r = self.layout.range(i);
        let mut g = vec![0.0; r.len()];
        self.block_gradient(x, state, i, &mut g);
        block_prox(&self.regularizers[i], &g, &x[r.clone()], v_i, &self.metric[r], out);
    }

    /// Full `h(x) = argmin_h H(x, h)`.
    pub fn full_update(&self, x: &[f64], state: &ResidualState, v: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim()];
        for i in 0..self.n_blocks() {
            let r = self.layout.range(i);
            self.block_update(x, state, v[i], i, &mut h[r]);
        }
        h
    }

    /// `H(x,h) = f(x) + <∇f(x), h> + ½||h||_v² + Ψ(x+h)`
    pub fn overapprox_h(&self, x: &[f64], h: &[f64], norms: &BlockNorms) -> Result<f64, ModelError> {
        self.check_x(x)?;
        self.check_x(h)?;
        let state = self.init_state(x);
        let g = self.gradient(x, &state);
        let xh: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        let psi = self.regularizer_value(&xh);
        if psi == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let lin: f64 = g.iter().zip(h).map(|(a, b)| a * b).sum();
        Ok(self.smooth_value(x, &state) + lin + 0.5 * blocks::weighted_norm_sq(h, norms, &self.layout)? + psi)
    }

    /// Strong convexity of `Ψ` w.r.t. `||·||_v`, derived from the regularizers.
    pub fn regularizer_strong_convexity(&self, v: &[f64]) -> f64 {
        (0..self.n_blocks())
            .map(|i| self.regularizers[i].strong_convexity(v[i], &self.metric[self.layout.range(i)]))
            .fold(f64::INFINITY, f64::min)
    }

    /// SVM primal value `P(w(x))`; `None` for other problems.
    pub fn primal_value(&self, state: &ResidualState) -> Option<f64> {
        match (&self.smooth, state) {
            (SmoothPart::SvmDual { signed, lambda, .. }, ResidualState::Primal(w)) => {
                let nw: f64 = w.iter().map(|v| v * v).sum();
                let n = signed.rows();
                let hinge: f64 = (0..n)
                    .map(|i| {
                        let (idx, val) = signed.row(i);
                        let m: f64 = idx.iter().zip(val).map(|(&k, &v)| v * w[k]).sum();
                        (1.0 - m).max(0.0)
                    })
                    .sum();
                Some(0.5 * lambda * nw + hinge / n as f64)
            }
            _ => None,
        }
    }

    /// SVM dual value `D(x) = -f(x)`; `None` for other problems.
    pub fn dual_value(&self, x: &[f64], state: &ResidualState) -> Option<f64> {
        match self.smooth {
            SmoothPart::SvmDual { .. } => Some(-self.smooth_value(x, state)),
            _ => None,
        }
    }

    /// `G(x) = P(w(x)) - D(x)`; `None` for other problems.
    pub fn duality_gap(&self, x: &[f64], state: &ResidualState) -> Option<f64> {
        Some(self.primal_value(state)? - self.dual_value(x, state)?)
    }

    /// Lipschitz data of `f` in the problem's block norms.
    pub fn smoothness(&self) -> Result<SmoothnessData, ModelError> {
        let metric = Some(self.metric.as_slice());
        let data = match &self.smooth {
            SmoothPart::LeastSquares { a, .. } => eso::lipschitz_from_quadratic_blocks(a, &self.layout, metric)?,
            SmoothPart::SvmDual { signed, lambda, .. } => {
                let n = signed.rows() as f64;
                eso::lipschitz_from_quadratic_blocks(&signed.transpose(), &self.layout, metric)?
                    .scaled(1.0 / (lambda * n * n))
            }
            SmoothPart::ToyLogistic { m, zeta } => toy_smoothness(*m, *zeta),
        };
        data.validate()?;
        Ok(data)
    }

    /// As [`smoothness`](Self::smoothness), with σ filled in by power iteration.
    pub fn smoothness_with_sigma(&self, tol: f64, max_iters: usize) -> Result<SmoothnessData, ModelError> {
        let mut data = self.smoothness()?;
        let metric = Some(self.metric.as_slice());
        data.sigma = Some(match &self.smooth {
            SmoothPart::LeastSquares { a, .. } => {
                eso::normalized_sigma(a, &self.layout, metric, &data.lipschitz, tol, max_iters)?
            }
            SmoothPart::SvmDual { signed, lambda, .. } => {
                // σ is scale-free; undo the 1/(λN²) factor carried by L.
                let n = signed.rows() as f64;
                let unscaled: Vec<f64> = data.lipschitz.iter().map(|l| l * lambda * n * n).collect();
                eso::normalized_sigma(&signed.transpose(), &self.layout, metric, &unscaled, tol, max_iters)?
            }
            SmoothPart::ToyLogistic { .. } => 1.0,
        });
        Ok(data)
    }
}

/// `g_i = -v_i B_i h_i`
pub fn composite_gradient_map(h: &[f64], norms: &BlockNorms, layout: &BlockLayout) -> Vec<f64> {
    let mut g = vec![0.0; h.len()];
    for i in 0..layout.n_blocks() {
        for c in layout.range(i) {
            g[c] = -norms.v()[i] * norms.metric()[c] * h[c];
        }
    }
    g
}

/// Strong convexity modulus of `½||Ax-b||²` w.r.t. `||·||_v`, i.e.
/// `λ_min(W^{-1/2} AᵀA W^{-1/2})` with `W = diag(v_i B_i)`. Dense, so limited
/// to `N <= 500`. Pass a ridge-augmented `A` to account for a ridge term.
pub fn quadratic_strong_convexity(
    a: &SparseMatrix,
    layout: &BlockLayout,
    metric: &[f64],
    v: &[f64],
) -> Result<f64, ModelError> {
    let n = a.cols();
    if n > 500 {
        return Err(ModelError::Invalid(format!("dense eigensolve refused for N = {n} > 500")));
    }
    let scale: Vec<f64> = (0..n).map(|c| 1.0 / (v[layout.block_of(c)] * metric[c]).sqrt()).collect();
    let s = a.scale_cols(&scale);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for r in 0..s.rows() {
        let (idx, val) = s.row(r);
        for (&p, &vp) in idx.iter().zip(val) {
            for (&q, &vq) in idx.iter().zip(val) {
                gram[(p, q)] += vp * vq;
            }
        }
    }
    Ok(SymmetricEigen::new(gram).eigenvalues.min().max(0.0))
}

/// `A` stacked on `√μ I`, with `b` padded by zeros: `½||Ax-b||² + (μ/2)||x||²`
/// as a single least-squares term.
pub fn ridge_augment(a: &SparseMatrix, b: &[f64], mu: f64) -> (SparseMatrix, Vec<f64>) {
    let n = a.cols();
    let trips: Vec<_> = (0..n).map(|i| (i, i, mu.sqrt())).collect();
    let ridge = SparseMatrix::from_triplets(n, n, &trips).expect("diagonal is well formed");
    let stacked = a.vstack(&ridge).expect("column counts agree");
    let mut bb = b.to_vec();
    bb.extend(std::iter::repeat(0.0).take(n));
    (stacked, bb)
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(f, f', f'')` of the toy logistic sum at `x`.
pub fn toy_derivatives(m: usize, zeta: f64, x: f64) -> (f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0);
    for j in 1..=m {
        let z = -x + zeta * j as f64;
        let s = sigmoid(z);
        out.0 += softplus(z);
        out.1 -= s;
        out.2 += s * (1.0 - s);
    }
    out
}

/// Global curvature bound of the toy sum: grid scan of `f''` refined by
/// ternary search around the best grid point, capped by `m/4`.
fn toy_global_curvature(m: usize, zeta: f64) -> f64 {
    let d2 = |x: f64| toy_derivatives(m, zeta, x).2;
    let lo = zeta.min(zeta * m as f64) - 40.0;
    let hi = zeta.max(zeta * m as f64) + 40.0;
    let step = (zeta.abs().min(1.0) / 64.0).max(1e-3);
    let steps = ((hi - lo) / step).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..=steps {
        let x = lo + k as f64 * step;
        let v = d2(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    for j in 1..=m {
        let x = zeta * j as f64;
        let v = d2(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if d2(m1) >= d2(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    best.0.max(d2(0.5 * (a + b))).min(0.25 * m as f64)
}

fn toy_smoothness(m: usize, zeta: f64) -> SmoothnessData {
    SmoothnessData {
        n: 1,
        lipschitz: vec![toy_global_curvature(m, zeta)],
        pattern: vec![vec![0]; m],
        ltilde: vec![0.25; m],
        lhat: vec![vec![0.25]; m],
        omega: 1,
        sigma: None,
    }
}
