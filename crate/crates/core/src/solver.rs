//! PCDM and its levelset-confined variant PCDM-M.
//!
//! Each iteration draws `S_k`, computes `h_i(x_k)` for every `i ∈ S_k` from
//! the same snapshot (in parallel when `thread_count > 1`) and then applies
//! the updates. In deterministic mode updates are applied by the coordinator
//! in ascending block order, so traces do not depend on the thread count.

use crate::blocks;
use crate::eso::{self, EsoError, EsoParameter, EsoSource};
use crate::io::TraceRecord;
use crate::model::{CompositeProblem, ModelError, Regularizer, ResidualState};
use crate::sampling::{Sampler, SamplingError, SamplingSpec};
use crate::theory::{self, RateInputs, TheoryError};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;
use thiserror::Error;

/// Tolerance and iteration cap for the σ power iteration behind RT-D.
const SIGMA_TOL: f64 = 1e-8;
const SIGMA_MAX_ITERS: usize = 20_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eso(#[from] EsoError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("non-finite objective at iteration {k}")]
    NumericalAbort { k: u64, trace: Box<RunTrace> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Pcdm,
    PcdmM,
}

impl Mode {
    pub fn from_tag(tag: &str) -> Option<Mode> {
        match tag {
            "auto" => Some(Mode::Auto),
            "pcdm" => Some(Mode::Pcdm),
            "pcdm-m" => Some(Mode::PcdmM),
            _ => None,
        }
    }
}

/// Where the step weights `v` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum StepWeights {
    /// Computed from the problem's smoothness data for the configured sampling.
    Eso(EsoSource),
    /// Supplied by the caller.
    Given(EsoParameter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub sampling: SamplingSpec,
    pub weights: StepWeights,
    /// Number of iterations; 0 records only the starting point.
    pub max_iterations: u64,
    pub seed: u64,
    pub thread_count: usize,
    pub mode: Mode,
    pub record_stride: u64,
    /// Apply updates in block order (bit-reproducible). Otherwise residual
    /// updates are accumulated atomically in parallel.
    pub deterministic: bool,
    /// PCDM-M compares against `F(x_k)` instead of `F(x_0)`.
    pub strict_monotone: bool,
    /// Fill the `ns` column; off keeps traces byte-identical between runs.
    pub record_time: bool,
    /// Recompute the residual from scratch every this many iterations (0 = never).
    pub refresh_every: u64,
    /// Starting point; zeros (projected onto the regularizer's domain) by default.
    pub x0: Option<Vec<f64>>,
    pub f_star: Option<f64>,
}

impl SolverConfig {
    pub fn new(sampling: SamplingSpec, weights: StepWeights) -> Self {
        SolverConfig {
            sampling,
            weights,
            max_iterations: 1000,
            seed: 0,
            thread_count: 1,
            mode: Mode::Auto,
            record_stride: 1,
            deterministic: true,
            strict_monotone: false,
            record_time: false,
            refresh_every: 1000,
            x0: None,
            f_star: None,
        }
    }

    pub fn validate(&self, problem: &CompositeProblem) -> Result<(), SolverError> {
        if self.thread_count == 0 {
            return Err(SolverError::Config("thread_count must be >= 1".into()));
        }
        if self.record_stride == 0 {
            return Err(SolverError::Config("record_stride must be >= 1".into()));
        }
        if self.sampling.n() != problem.n_blocks() {
            return Err(SolverError::Config(format!(
                "sampling over {} blocks, problem has {}",
                self.sampling.n(),
                problem.n_blocks()
            )));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != problem.dim() {
                return Err(SolverError::Config("x0 has the wrong length".into()));
            }
        }
        if let StepWeights::Given(p) = &self.weights {
            if p.v.len() != problem.n_blocks() || p.v.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(SolverError::Config("v must be positive, one entry per block".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub x: Vec<f64>,
    pub seed: u64,
    /// Mode actually used (never `Auto`).
    pub mode: Mode,
    pub eso: EsoParameter,
    pub f_star: Option<f64>,
    /// PCDM-M candidates rejected by the levelset test.
    pub rejected: u64,
    pub config: SolverConfig,
}

impl RunTrace {
    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.f)
    }

    /// `F(x_k) - F*` per record, when `F*` is known.
    pub fn xi(&self) -> Option<Vec<(u64, f64)>> {
        let fs = self.f_star?;
        Some(self.records.iter().map(|r| (r.k, r.f - fs)).collect())
    }
}

/// Weights for `config` on `problem`.
pub fn resolve_weights(problem: &CompositeProblem, config: &SolverConfig) -> Result<EsoParameter, SolverError> {
    match &config.weights {
        StepWeights::Given(p) => Ok(p.clone()),
        StepWeights::Eso(source) => {
            let data = if *source == EsoSource::RtD {
                problem.smoothness_with_sigma(SIGMA_TOL, SIGMA_MAX_ITERS)?
            } else {
                problem.smoothness()?
            };
            Ok(eso::build_eso(*source, &data, &config.sampling)?)
        }
    }
}

/// PCDM when `F` is known to be strongly convex or the ESO is monotonic,
/// PCDM-M otherwise (including when the constants are unknown).
pub fn select_mode(problem: &CompositeProblem, eso: &EsoParameter) -> Mode {
    if eso.monotonic {
        return Mode::Pcdm;
    }
    let mu_psi = problem.mu_psi.unwrap_or_else(|| problem.regularizer_strong_convexity(&eso.v));
    let mu = problem.mu_f.unwrap_or(0.0) + mu_psi;
    if mu > 0.0 {
        Mode::Pcdm
    } else {
        Mode::PcdmM
    }
}

fn default_start(problem: &CompositeProblem) -> Vec<f64> {
    let mut x = vec![0.0; problem.dim()];
    for i in 0..problem.n_blocks() {
        if let Regularizer::Box { lo, hi } = problem.regularizers[i] {
            for c in problem.layout.range(i) {
                x[c] = 0.0f64.clamp(lo, hi);
            }
        }
    }
    x
}

/// Per-run workspace: update buffer and optional thread pool.
struct Stepper {
    h: Vec<f64>,
    pool: Option<rayon::ThreadPool>,
    deterministic: bool,
}

impl Stepper {
    fn new(dim: usize, threads: usize, deterministic: bool) -> Result<Self, SolverError> {
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| SolverError::Config(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Stepper { h: vec![0.0; dim], pool, deterministic })
    }

    /// Fills `h` on the blocks of `subset` from the snapshot `(x, state)`.
    fn compute(&mut self, problem: &CompositeProblem, x: &[f64], state: &ResidualState, subset: &[usize], v: &[f64]) {
        match &self.pool {
            None => {
                for &i in subset {
                    let r = problem.layout.range(i);
                    problem.block_update(x, state, v[i], i, &mut self.h[r]);
                }
            }
            Some(pool) => {
                let parts: Vec<Vec<f64>> = pool.install(|| {
                    subset
                        .par_iter()
                        .map(|&i| {
                            let mut out = vec![0.0; problem.layout.range(i).len()];
                            problem.block_update(x, state, v[i], i, &mut out);
                            out
                        })
                        .collect()
                });
                for (&i, part) in subset.iter().zip(parts) {
                    let r = problem.layout.range(i);
                    self.h[r].copy_from_slice(&part);
                }
            }
        }
    }

    fn apply(&self, problem: &CompositeProblem, x: &mut [f64], state: &mut ResidualState, subset: &[usize]) {
        match (&self.pool, self.deterministic) {
            (Some(pool), false) => {
                let atoms = as_atomic(state.as_mut_slice());
                let h = &self.h;
                pool.install(|| {
                    subset.par_iter().for_each(|&i| {
                        let r = problem.layout.range(i);
                        problem.for_each_state_delta(r.start, &h[r], |j, d| atomic_add(&atoms[j], d));
                    })
                });
                for &i in subset {
                    for c in problem.layout.range(i) {
                        x[c] += self.h[c];
                    }
                }
            }
            _ => problem.apply_update(x, state, subset, &self.h),
        }
    }

    fn finite_on(&self, problem: &CompositeProblem, subset: &[usize]) -> bool {
        subset.iter().all(|&i| self.h[problem.layout.range(i)].iter().all(|v| v.is_finite()))
    }
}

fn as_atomic(s: &mut [f64]) -> &[AtomicU64] {
    // SAFETY: AtomicU64 has the size and alignment of u64, which matches f64
    // on every target with 64-bit atomics; the exclusive borrow guarantees no
    // other access for the returned lifetime.
    unsafe { &*(s as *mut [f64] as *const [AtomicU64]) }
}

fn atomic_add(a: &AtomicU64, d: f64) {
    let mut cur = a.load(Ordering::Relaxed);
    loop {
        let next = (f64::from_bits(cur) + d).to_bits();
        match a.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return,
            Err(seen) => cur = seen,
        }
    }
}

/// One PCDM step on the blocks of `subset`: every `h_i` is computed from the
/// incoming `x`, then `x ← x + Σ_{i∈S} U_i h_i`.
pub fn pcdm_step(problem: &CompositeProblem, x: &mut [f64], state: &mut ResidualState, subset: &[usize], v: &[f64]) {
    let mut st = Stepper { h: vec![0.0; problem.dim()], pool: None, deterministic: true };
    st.compute(problem, x, state, subset, v);
    st.apply(problem, x, state, subset);
}

/// One PCDM-M step: the PCDM candidate is kept only if `F(candidate) <= threshold`.
/// Returns whether it was accepted.
pub fn pcdm_m_step(
    problem: &CompositeProblem,
    x: &mut [f64],
    state: &mut ResidualState,
    subset: &[usize],
    v: &[f64],
    threshold: f64,
) -> bool {
    let backup_x = x.to_vec();
    let backup_state = state.clone();
    pcdm_step(problem, x, state, subset, v);
    if problem.function_value(x, state) <= threshold {
        true
    } else {
        x.copy_from_slice(&backup_x);
        *state = backup_state;
        false
    }
}

fn make_record(
    problem: &CompositeProblem,
    x: &[f64],
    state: &ResidualState,
    norms: &blocks::BlockNorms,
    v: &[f64],
    k: u64,
    ns: u64,
) -> TraceRecord {
    let h = problem.full_update(x, state, v);
    let hnorm2 = blocks::weighted_norm_sq(&h, norms, &problem.layout).unwrap_or(f64::NAN);
    TraceRecord { k, f: problem.function_value(x, state), gap: problem.duality_gap(x, state), hnorm2, ns }
}

/// Runs PCDM or PCDM-M for `config.max_iterations` iterations.
pub fn run(problem: &CompositeProblem, config: &SolverConfig) -> Result<RunTrace, SolverError> {
    config.validate(problem)?;
    let eso = resolve_weights(problem, config)?;
    let mode = match config.mode {
        Mode::Auto => select_mode(problem, &eso),
        m => m,
    };
    let v = eso.v.clone();
    let norms = problem.norms(&v)?;
    let mut x = config.x0.clone().unwrap_or_else(|| default_start(problem));
    let mut state = problem.init_state(&x);
    let mut sampler = Sampler::new(config.sampling.clone(), config.seed);
    let mut stepper = Stepper::new(problem.dim(), config.thread_count, config.deterministic)?;
    let mut subset = Vec::with_capacity(problem.n_blocks());
    let start = Instant::now();
    let elapsed = |on: bool| if on { start.elapsed().as_nanos() as u64 } else { 0 };

    let mut trace = RunTrace {
        records: Vec::new(),
        x: Vec::new(),
        seed: config.seed,
        mode,
        eso,
        f_star: config.f_star,
        rejected: 0,
        config: config.clone(),
    };
    let first = make_record(problem, &x, &state, &norms, &v, 0, elapsed(config.record_time));
    let mut threshold = first.f;
    trace.records.push(first);
    if !threshold.is_finite() {
        trace.x = x;
        return Err(SolverError::NumericalAbort { k: 0, trace: Box::new(trace) });
    }

    for k in 1..=config.max_iterations {
        sampler.draw_into(&mut subset);
        stepper.compute(problem, &x, &state, &subset, &v);
        let finite = stepper.finite_on(problem, &subset);
        match mode {
            Mode::PcdmM if finite => {
                let backup_x = x.clone();
                let backup_state = state.clone();
                stepper.apply(problem, &mut x, &mut state, &subset);
                let f = problem.function_value(&x, &state);
                if f <= threshold {
                    if config.strict_monotone {
                        threshold = f;
                    }
                } else {
                    x = backup_x;
                    state = backup_state;
                    trace.rejected += 1;
                }
            }
            _ => stepper.apply(problem, &mut x, &mut state, &subset),
        }
        if config.refresh_every > 0 && k % config.refresh_every == 0 {
            state = problem.init_state(&x);
        }
        let due = k % config.record_stride == 0 || k == config.max_iterations;
        if due || !finite {
            let rec = make_record(problem, &x, &state, &norms, &v, k, elapsed(config.record_time));
            let bad = !finite || !rec.f.is_finite();
            trace.records.push(rec);
            if bad {
                trace.x = x;
                return Err(SolverError::NumericalAbort { k, trace: Box::new(trace) });
            }
        }
    }
    trace.x = x;
    Ok(trace)
}

/// Result of the restart strategy.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub best: RunTrace,
    pub runs: u64,
    pub iterations_per_run: u64,
    /// Final `F` of every run, in run order.
    pub finals: Vec<f64>,
}

/// `r = ⌈log(1/ρ)⌉` independent runs of the restart length from the same
/// start, seeds `seed + j`; returns the run with the smallest final `F`.
pub fn multi_run_restart(
    problem: &CompositeProblem,
    config: &SolverConfig,
    inputs: &RateInputs,
) -> Result<RestartOutcome, SolverError> {
    let (runs, k) = theory::k_restart(inputs)?;
    let mut cfg = config.clone();
    cfg.max_iterations = k.k;
    cfg.record_stride = k.k.max(1);
    let mut best: Option<RunTrace> = None;
    let mut finals = Vec::with_capacity(runs as usize);
    for j in 0..runs {
        cfg.seed = config.seed.wrapping_add(j);
        let t = run(problem, &cfg)?;
        finals.push(t.final_value());
        if best.as_ref().map_or(true, |b| t.final_value() < b.final_value()) {
            best = Some(t);
        }
    }
    Ok(RestartOutcome { best: best.expect("at least one run"), runs, iterations_per_run: k.k, finals })
}

/// High-accuracy estimate of `F*`.
///
/// Unregularized least squares is solved directly (dense SVD least squares,
/// `N <= 2000`). Everything else runs full-sampling PCDM with the FR weights
/// for up to `10^5` iterations and returns the best value seen.
pub fn reference_solve(problem: &CompositeProblem) -> Result<f64, SolverError> {
    use crate::model::SmoothPart;
    let unregularized = problem.regularizers.iter().all(|r| *r == Regularizer::Zero);
    if let (SmoothPart::LeastSquares { a, b }, true) = (&problem.smooth, unregularized) {
        if a.cols() <= 2000 {
            let dense = DMatrix::from_row_slice(a.rows(), a.cols(), &a.to_dense());
            let svd = dense.svd(true, true);
            let x = svd
                .solve(&DVector::from_column_slice(b), 1e-12)
                .map_err(|e| SolverError::Config(e.to_string()))?;
            return Ok(problem.objective(x.as_slice()));
        }
    }
    let n = problem.n_blocks();
    let sampling = SamplingSpec::tau_nice(n, n)?;
    let v = eso::build_eso(EsoSource::Fr, &problem.smoothness()?, &sampling)?.v;
    let all: Vec<usize> = (0..n).collect();
    let mut x = default_start(problem);
    let mut state = problem.init_state(&x);
    let mut best = problem.function_value(&x, &state);
    let mut stepper = Stepper::new(problem.dim(), 1, true)?;
    for k in 1..=100_000u64 {
        stepper.compute(problem, &x, &state, &all, &v);
        let step: f64 = stepper.h.iter().map(|d| d * d).sum();
        stepper.apply(problem, &mut x, &mut state, &all);
        if k % 1000 == 0 {
            state = problem.init_state(&x);
        }
        if k % 100 == 0 || step < 1e-32 {
            best = best.min(problem.function_value(&x, &state));
        }
        if step < 1e-32 {
            break;
        }
    }
    Ok(best.min(problem.objective(&x)))
}
