//! Iteration-complexity certificates and brute-force oracles.
//!
//! The `k_*` functions return the real-valued count together with its
//! ceiling. The `check_*` oracles take exact expectations over the full
//! support of a sampling, so they are limited to small `n`.

pub mod suite;

use crate::blocks::{self, BlockNorms};
use crate::model::{CompositeProblem, ModelError};
use crate::sampling::{SamplingError, SamplingSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Absolute tolerance for equalities checked by the oracles.
pub const EQ_TOL: f64 = 1e-10;
/// Allowed negative slack for inequalities checked by the oracles.
pub const INEQ_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("strong convexity required (mu_f + mu_psi = 0); use the convex bound")]
    NotStronglyConvex,
    #[error("levelset radius is infinite; use k_unbounded")]
    UnboundedLevelset,
    #[error("degenerate construction: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Inputs shared by the rate bounds and the iteration counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    /// `E|S|/n`
    pub alpha: f64,
    pub mu_f: f64,
    pub mu_psi: f64,
    /// `||x_0 - x*||_v²`
    pub dist0_sq: f64,
    /// `F(x_0) - F*`
    pub xi0: f64,
    pub epsilon: f64,
    pub rho: f64,
    /// Squared levelset radius; `+∞` when unknown.
    pub levelset_radius_sq: f64,
}

impl RateInputs {
    pub fn new(alpha: f64, dist0_sq: f64, xi0: f64) -> Self {
        RateInputs {
            alpha,
            mu_f: 0.0,
            mu_psi: 0.0,
            dist0_sq,
            xi0,
            epsilon: 1e-3,
            rho: 0.1,
            levelset_radius_sq: f64::INFINITY,
        }
    }

    pub fn with_target(mut self, epsilon: f64, rho: f64) -> Self {
        self.epsilon = epsilon;
        self.rho = rho;
        self
    }

    pub fn with_strong_convexity(mut self, mu_f: f64, mu_psi: f64) -> Self {
        self.mu_f = mu_f;
        self.mu_psi = mu_psi;
        self
    }

    pub fn with_levelset_radius_sq(mut self, r2: f64) -> Self {
        self.levelset_radius_sq = r2;
        self
    }

    /// `c = max{R², ξ_0}`
    pub fn c(&self) -> f64 {
        self.levelset_radius_sq.max(self.xi0)
    }

    fn initial_potential(&self) -> f64 {
        0.5 * self.dist0_sq + self.xi0
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        let bad = |m: &str| Err(TheoryError::Invalid(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.mu_f >= 0.0 && self.mu_psi >= 0.0) {
            return bad("strong convexity constants must be nonnegative");
        }
        if !(self.dist0_sq >= 0.0 && self.xi0 >= 0.0) || !self.dist0_sq.is_finite() || !self.xi0.is_finite() {
            return bad("dist0_sq and xi0 must be finite and nonnegative");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.levelset_radius_sq >= 0.0) {
            return bad("levelset radius must be nonnegative");
        }
        Ok(())
    }

    /// `γ* = 2(μ_f + μ_Ψ)/(1 + μ_f + 2μ_Ψ)`
    pub fn gamma_star(&self) -> f64 {
        2.0 * (self.mu_f + self.mu_psi) / (1.0 + self.mu_f + 2.0 * self.mu_psi)
    }
}

/// Real-valued iteration count and its ceiling (never negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub real: f64,
    pub k: u64,
}

impl Certificate {
    fn from_real(real: f64) -> Self {
        Certificate { real, k: ceil_count(real) }
    }
}

/// Ceiling that ignores float noise just above an integer.
fn ceil_count(x: f64) -> u64 {
    if !(x > 0.0) {
        return 0;
    }
    (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as u64
}

/// `E[F(x_k) - F*] <= (½ dist0_sq + ξ_0)/(1 + αk)`
pub fn bound_convex(inp: &RateInputs, k: u64) -> Result<f64, TheoryError> {
    inp.validate()?;
    Ok(inp.initial_potential() / (1.0 + inp.alpha * k as f64))
}

/// `(1 - αγ*)^k ((1+μ_Ψ)/2 dist0_sq + ξ_0)`
pub fn bound_strongly_convex(inp: &RateInputs, k: u64) -> Result<f64, TheoryError> {
    inp.validate()?;
    if inp.mu_f + inp.mu_psi <= 0.0 {
        return Err(TheoryError::NotStronglyConvex);
    }
    let factor = (1.0 - inp.alpha * inp.gamma_star()).max(0.0);
    let start = 0.5 * (1.0 + inp.mu_psi) * inp.dist0_sq + inp.xi0;
    Ok(if k == 0 { start } else { factor.powf(k as f64) * start })
}

/// High-probability count for convex `F` with a bounded levelset.
pub fn k_convex(inp: &RateInputs) -> Result<Certificate, TheoryError> {
    inp.validate()?;
    let c = inp.c();
    if !c.is_finite() {
        return Err(TheoryError::UnboundedLevelset);
    }
    let (a, e) = (inp.alpha, inp.epsilon);
    let real = (2.0 * c / (a * e)) * (1.0 + (inp.initial_potential() / (2.0 * c * inp.rho)).ln()) + 2.0 - 1.0 / a;
    Ok(Certificate::from_real(real))
}

/// High-probability count for strongly convex `F`.
pub fn k_strongly_convex(inp: &RateInputs) -> Result<Certificate, TheoryError> {
    inp.validate()?;
    let mu = inp.mu_f + inp.mu_psi;
    if mu <= 0.0 {
        return Err(TheoryError::NotStronglyConvex);
    }
    let start = 0.5 * (1.0 + inp.mu_psi) * inp.dist0_sq + inp.xi0;
    let real = (1.0 + inp.mu_f + 2.0 * inp.mu_psi) / (2.0 * inp.alpha * mu) * (start / (inp.epsilon * inp.rho)).ln();
    Ok(Certificate::from_real(real.max(0.0)))
}

/// High-probability count without any levelset assumption.
pub fn k_unbounded(inp: &RateInputs) -> Result<Certificate, TheoryError> {
    inp.validate()?;
    let real = (inp.initial_potential() / (inp.rho * inp.epsilon) - 1.0) / inp.alpha;
    Ok(Certificate::from_real(real.max(0.0)))
}

/// Number of independent runs and iterations per run for the restart scheme.
pub fn k_restart(inp: &RateInputs) -> Result<(u64, Certificate), TheoryError> {
    inp.validate()?;
    let runs = ceil_count((1.0 / inp.rho).ln()).max(1);
    let real = (inp.initial_potential() * std::f64::consts::E / inp.epsilon - 1.0) / inp.alpha;
    Ok((runs, Certificate::from_real(real.max(0.0))))
}

/// Bounds from the earlier analysis, for side-by-side reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorBounds {
    /// `2cξ_0/(2c + αkξ_0)`
    pub rate: f64,
    /// Convex high-probability count.
    pub k_tilde: Certificate,
    /// Strongly convex count; `None` when `μ_f + μ_Ψ = 0`.
    pub k_hat: Option<Certificate>,
    /// Asymptotic ratio of the prior rate to [`bound_convex`]: `4c/(dist0_sq + 2ξ_0)`.
    pub ratio: f64,
}

pub fn rt12a_bounds(inp: &RateInputs, k: u64) -> Result<PriorBounds, TheoryError> {
    inp.validate()?;
    let c = inp.c();
    if !c.is_finite() {
        return Err(TheoryError::UnboundedLevelset);
    }
    let (a, xi0) = (inp.alpha, inp.xi0);
    let rate = 2.0 * c * xi0 / (2.0 * c + a * k as f64 * xi0);
    let k_tilde =
        Certificate::from_real((2.0 * c / (a * inp.epsilon)) * (1.0 + (1.0 / inp.rho).ln()) + 2.0 - 2.0 * c / (a * xi0));
    let mu = inp.mu_f + inp.mu_psi;
    let k_hat = (mu > 0.0).then(|| {
        let real = (1.0 / a) * ((1.0 + inp.mu_psi) / mu) * (xi0 / (inp.epsilon * inp.rho)).ln();
        Certificate::from_real(real.max(0.0))
    });
    let ratio = 4.0 * c / (inp.dist0_sq + 2.0 * xi0);
    Ok(PriorBounds { rate, k_tilde, k_hat, ratio })
}

/// Squared levelset radius bound from strong convexity:
/// `F(x) - F* >= (μ_F/2)||x - x*||²` gives `R² <= 2ξ_0/μ_F`.
pub fn levelset_radius_sq_bound(xi0: f64, mu_total: f64) -> Result<f64, TheoryError> {
    if !(mu_total > 0.0) {
        return Err(TheoryError::NotStronglyConvex);
    }
    Ok(2.0 * xi0 / mu_total)
}

/// Outcome of an oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub checks: usize,
    /// Largest amount by which an inequality or equality was off (`<= 0` is fine
    /// for inequalities, `|·|` for equalities).
    pub max_violation: f64,
    pub tolerance: f64,
    /// Inputs of the worst check, for reproduction.
    pub worst: String,
}

impl OracleReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        OracleReport { name, checks: 0, max_violation: f64::NEG_INFINITY, tolerance, worst: String::new() }
    }

    fn record(&mut self, violation: f64, inputs: impl FnOnce() -> String) {
        self.checks += 1;
        if violation > self.max_violation || violation.is_nan() {
            self.max_violation = if violation.is_nan() { f64::INFINITY } else { violation };
            self.worst = inputs();
        }
    }

    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }

    /// Combines two reports, keeping the worse violation.
    pub fn merge(mut self, other: OracleReport) -> OracleReport {
        self.checks += other.checks;
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.worst = other.worst;
        }
        self
    }
}

fn with_subset(x: &[f64], h: &[f64], subset: &[usize], problem: &CompositeProblem) -> Vec<f64> {
    let mut out = x.to_vec();
    for &i in subset {
        for c in problem.layout.range(i) {
            out[c] += h[c];
        }
    }
    out
}

fn check_dims(problem: &CompositeProblem, spec: &SamplingSpec, v: &[f64]) -> Result<(), TheoryError> {
    if spec.n() != problem.n_blocks() || v.len() != problem.n_blocks() {
        return Err(TheoryError::Invalid("sampling, v and problem disagree on n".into()));
    }
    Ok(())
}

/// `Σ_S P(S) f(x + h_[S]) <= f(x) + α(<∇f(x), h> + ½||h||_v²)` for random
/// `x, h` with entries in `[-1, 1]`.
pub fn check_eso_inequality(
    problem: &CompositeProblem,
    spec: &SamplingSpec,
    v: &[f64],
    trials: usize,
    seed: u64,
) -> Result<OracleReport, TheoryError> {
    check_dims(problem, spec, v)?;
    let support = spec.enumerate_support()?;
    let alpha = spec.alpha()?;
    let norms = problem.norms(v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::new("eso_inequality", INEQ_TOL);
    for _ in 0..trials {
        let x: Vec<f64> = (0..problem.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..problem.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let violation = eso_violation(problem, &support, alpha, &norms, &x, &h)?;
        report.record(violation, || format!("x={x:?} h={h:?} v={v:?}"));
    }
    Ok(report)
}

fn eso_violation(
    problem: &CompositeProblem,
    support: &[(Vec<usize>, f64)],
    alpha: f64,
    norms: &BlockNorms,
    x: &[f64],
    h: &[f64],
) -> Result<f64, TheoryError> {
    let st = problem.init_state(x);
    let fx = problem.smooth_value(x, &st);
    let g = problem.gradient(x, &st);
    let lin: f64 = g.iter().zip(h).map(|(a, b)| a * b).sum();
    let rhs = fx + alpha * (lin + 0.5 * blocks::weighted_norm_sq(h, norms, &problem.layout).map_err(ModelError::from)?);
    let lhs: f64 = support
        .iter()
        .map(|(s, p)| {
            let xs = with_subset(x, h, s, problem);
            p * problem.smooth_value(&xs, &problem.init_state(&xs))
        })
        .sum();
    Ok(lhs - rhs)
}

/// `Σ_S P(S) Ψ(x + h_[S]) = αΨ(x+h) + (1-α)Ψ(x)`.
pub fn check_block_separable_expectation(
    problem: &CompositeProblem,
    spec: &SamplingSpec,
    x: &[f64],
    h: &[f64],
) -> Result<OracleReport, TheoryError> {
    if spec.n() != problem.n_blocks() || x.len() != problem.dim() || h.len() != problem.dim() {
        return Err(TheoryError::Invalid("dimension mismatch".into()));
    }
    let support = spec.enumerate_support()?;
    let alpha = spec.alpha()?;
    let xh: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
    let rhs = alpha * problem.regularizer_value(&xh) + (1.0 - alpha) * problem.regularizer_value(x);
    let lhs: f64 = support
        .iter()
        .map(|(s, p)| p * problem.regularizer_value(&with_subset(x, h, s, problem)))
        .sum();
    let mut report = OracleReport::new("block_separable_expectation", EQ_TOL);
    let diff = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
    report.record(diff, || format!("x={x:?} h={h:?} lhs={lhs} rhs={rhs}"));
    Ok(report)
}

/// Slacks (`rhs - lhs`) of the one-step descent lemma at a pair `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma3Slacks {
    /// The main inequality with strong convexity constants.
    pub main: f64,
    /// `E F(x_+) <= F(x) - (α/2)(μ_Ψ+1)||h(x)||_v²`
    pub descent: f64,
    /// The main inequality with both constants set to zero.
    pub trivial: f64,
}

impl Lemma3Slacks {
    pub fn min(&self) -> f64 {
        self.main.min(self.descent).min(self.trivial)
    }
}

/// Exact expectations of the one-step lemma for `x_+ = x + h(x)_[S]`.
/// `mu_f`, `mu_psi` must be valid strong convexity constants w.r.t. `||·||_v`.
pub fn lemma3_slacks(
    problem: &CompositeProblem,
    spec: &SamplingSpec,
    v: &[f64],
    x: &[f64],
    y: &[f64],
    mu_f: f64,
    mu_psi: f64,
) -> Result<Lemma3Slacks, TheoryError> {
    check_dims(problem, spec, v)?;
    let support = spec.enumerate_support()?;
    let alpha = spec.alpha()?;
    let norms = problem.norms(v)?;
    let layout = &problem.layout;
    let nsq = |d: &[f64]| blocks::weighted_norm_sq(d, &norms, layout).map_err(ModelError::from);
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<f64>>();

    let st = problem.init_state(x);
    let h = problem.full_update(x, &st, v);
    let fx = problem.function_value(x, &st);
    let fy = problem.objective(y);
    let dxy = nsq(&diff(x, y))?;

    let (mut ef, mut ed) = (0.0, 0.0);
    for (s, p) in &support {
        let xp = with_subset(x, &h, s, problem);
        ef += p * problem.objective(&xp);
        ed += p * nsq(&diff(&xp, y))?;
    }
    let k = mu_psi + 1.0;
    let main = fx + 0.5 * k * dxy - alpha * (fx - fy + 0.5 * (mu_f + mu_psi) * dxy) - (ef + 0.5 * k * ed);
    let descent = fx - 0.5 * alpha * k * nsq(&h)? - ef;
    let trivial = fx + 0.5 * dxy - alpha * (fx - fy) - (ef + 0.5 * ed);
    Ok(Lemma3Slacks { main, descent, trivial })
}

/// Runs [`lemma3_slacks`] and reports the worst slack as a violation.
pub fn check_lemma3(
    problem: &CompositeProblem,
    spec: &SamplingSpec,
    v: &[f64],
    x: &[f64],
    y: &[f64],
    mu_f: f64,
    mu_psi: f64,
) -> Result<OracleReport, TheoryError> {
    let s = lemma3_slacks(problem, spec, v, x, y, mu_f, mu_psi)?;
    let mut report = OracleReport::new("lemma3", INEQ_TOL);
    report.record(-s.min(), || format!("x={x:?} y={y:?} v={v:?} slacks={s:?}"));
    Ok(report)
}

/// Walk of the two-path sequence that shows the `1/(ερ)` count cannot be improved.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub theta: f64,
    pub k: u64,
    /// `P(ξ_K >= ε)` computed on the two-path distribution.
    pub prob_at_k: f64,
    /// Largest excess of `E[½r_{k+1} + ξ_{k+1}]` over `½r_k + (1-ζ)ξ_k`.
    pub max_violation_potential: f64,
    /// Largest excess of `E[ξ_{k+1}]` over `ξ_k`.
    pub max_violation_monotone: f64,
    /// Whether both assumptions held at every step and `P(ξ_K >= ε) >= ρ`.
    pub holds: bool,
}

pub fn tightness_example(rho: f64, epsilon: f64, zeta: f64, r0: f64, xi0: f64) -> Result<TightnessReport, TheoryError> {
    if !(rho > 0.0 && rho <= 1.0 && epsilon > 0.0 && zeta > 0.0 && zeta < 1.0 && r0 >= 0.0 && xi0 >= 0.0) {
        return Err(TheoryError::Invalid("need rho in (0,1], epsilon > 0, zeta in (0,1), r0, xi0 >= 0".into()));
    }
    let theta = (0.5 * r0 + (1.0 - zeta) * xi0) / rho - epsilon;
    if !(theta > 0.0) {
        return Err(TheoryError::Degenerate(format!("theta = {theta} <= 0")));
    }
    let q = theta / (zeta * epsilon);
    let k = (q + 1e-9 * q.max(1.0)).floor() as u64;
    let step = 2.0 * zeta * epsilon;
    let tol = 1e-12 * (1.0 + theta);

    // Step 0 -> 1 is random; afterwards both paths are deterministic.
    let e_pot = rho * (theta + epsilon);
    let mut v_pot = e_pot - (0.5 * r0 + (1.0 - zeta) * xi0);
    let mut v_mono = rho * epsilon - xi0;

    // Afterwards the active path is deterministic: r_j = 2θ - step·(j - 1),
    // ξ_j = ε while r stays above `step`. The zero path stays at (0, 0).
    let mut active_at_k = k >= 1;
    for j in 1..k {
        let r = 2.0 * theta - step * (j - 1) as f64;
        let (r_next, xi_next) = if r >= step { (r - step, epsilon) } else { (0.0, 0.0) };
        v_pot = v_pot.max((0.5 * r_next + xi_next) - (0.5 * r + (1.0 - zeta) * epsilon));
        v_mono = v_mono.max(xi_next - epsilon);
        if xi_next == 0.0 {
            active_at_k = false;
            break;
        }
    }
    let prob_at_k = if k == 0 {
        if xi0 >= epsilon { 1.0 } else { 0.0 }
    } else if active_at_k {
        rho
    } else {
        0.0
    };
    let holds = v_pot <= tol && v_mono <= tol && prob_at_k >= rho;
    Ok(TightnessReport {
        theta,
        k,
        prob_at_k,
        max_violation_potential: v_pot,
        max_violation_monotone: v_mono,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn convex_bound_hand_values() {
        let inp = RateInputs::new(0.5, 2.0, 1.0);
        assert_eq!(bound_convex(&inp, 0).unwrap(), 2.0);
        assert_relative_eq!(bound_convex(&inp, 6).unwrap(), 0.5);
        let one = RateInputs::new(1.0, 2.0, 1.0);
        assert_relative_eq!(bound_convex(&one, 3).unwrap(), 2.0 * bound_convex(&one, 7).unwrap());
    }

    #[test]
    fn strongly_convex_bound_hand_values() {
        let inp = RateInputs::new(0.5, 2.0, 1.0).with_strong_convexity(0.5, 0.0);
        let b0 = bound_strongly_convex(&inp, 0).unwrap();
        assert_relative_eq!(b0, 2.0);
        assert_relative_eq!(bound_strongly_convex(&inp, 1).unwrap() / b0, 2.0 / 3.0, max_relative = 1e-14);
        let edge = RateInputs::new(1.0, 2.0, 1.0).with_strong_convexity(1.0, 0.0);
        assert_eq!(bound_strongly_convex(&edge, 1).unwrap(), 0.0);
        assert_eq!(bound_strongly_convex(&RateInputs::new(1.0, 1.0, 1.0), 1), Err(TheoryError::NotStronglyConvex));
    }

    #[test]
    fn k_convex_hand_value() {
        let inp = RateInputs::new(1.0, 1.0, 0.5).with_target(0.1, 0.1).with_levelset_radius_sq(1.0);
        assert_eq!(inp.c(), 1.0);
        let c = k_convex(&inp).unwrap();
        assert_eq!(c.k, 54);
        assert!((c.real - 53.188).abs() < 1e-3);
        let wider = k_convex(&inp.with_target(0.1, 0.1 / std::f64::consts::E)).unwrap();
        assert_relative_eq!(wider.real - c.real, 20.0, max_relative = 1e-12);
        assert_eq!(k_convex(&RateInputs::new(1.0, 1.0, 0.5)), Err(TheoryError::UnboundedLevelset));
    }

    #[test]
    fn k_strongly_convex_hand_value() {
        let inp = RateInputs::new(1.0, 2.0, 1.0).with_target(0.1, 0.1).with_strong_convexity(1.0, 0.0);
        assert_eq!(k_strongly_convex(&inp).unwrap().k, 6);
        let tiny = RateInputs::new(1.0, 0.0, 0.001).with_target(0.1, 0.1).with_strong_convexity(1.0, 0.0);
        assert_eq!(k_strongly_convex(&tiny).unwrap().k, 0);
        let fast = RateInputs { alpha: 0.5, ..inp };
        assert_relative_eq!(k_strongly_convex(&fast).unwrap().real, 2.0 * k_strongly_convex(&inp).unwrap().real);
    }

    #[test]
    fn k_unbounded_and_restart_hand_values() {
        let inp = RateInputs::new(1.0, 2.0, 1.0).with_target(0.1, 0.1);
        assert_eq!(k_unbounded(&inp).unwrap().k, 199);
        let (r, k) = k_restart(&inp).unwrap();
        assert_eq!((r, k.k), (3, 54));
        assert_eq!(k_restart(&inp.with_target(0.1, 1.0 / std::f64::consts::E)).unwrap().0, 1);
        assert_eq!(k_restart(&inp.with_target(0.1, 0.01)).unwrap().0, 5);
        let done = RateInputs::new(1.0, 0.0, 0.001).with_target(0.1, 0.1);
        assert_eq!(k_unbounded(&done).unwrap().k, 0);
    }

    #[test]
    fn restart_beats_single_run_for_small_rho() {
        for rho in [0.04, 0.01, 0.001] {
            let inp = RateInputs::new(1.0, 2.0, 1.0).with_target(0.1, rho);
            let (r, k) = k_restart(&inp).unwrap();
            assert!(r * k.k < k_unbounded(&inp).unwrap().k, "rho={rho}");
        }
    }

    #[test]
    fn prior_bound_ratios() {
        let a = RateInputs::new(1.0, 0.0, 1.0);
        assert_relative_eq!(rt12a_bounds(&a.with_levelset_radius_sq(1.0), 0).unwrap().ratio, 2.0);
        let b = RateInputs::new(1.0, 1.0, 1.0).with_levelset_radius_sq(2.0);
        assert_relative_eq!(rt12a_bounds(&b, 0).unwrap().ratio, 8.0 / 3.0);
        assert_eq!(rt12a_bounds(&b, 0).unwrap().rate, 1.0);
        assert!(rt12a_bounds(&b, 0).unwrap().k_hat.is_none());
    }

    #[test]
    fn tightness_reference_case() {
        let t = tightness_example(0.1, 0.01, 0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(t.theta, 9.99, max_relative = 1e-14);
        assert_eq!(t.k, 1998);
        assert_eq!(t.prob_at_k, 0.1);
        assert!(t.holds, "{t:?}");
        assert!(t.max_violation_potential.abs() < 1e-12);
    }

    #[test]
    fn tightness_degenerate_rejected() {
        assert!(matches!(tightness_example(0.5, 10.0, 0.5, 0.0, 1.0), Err(TheoryError::Degenerate(_))));
    }

    #[test]
    fn invalid_rho_rejected() {
        assert!(k_unbounded(&RateInputs::new(1.0, 1.0, 1.0).with_target(0.1, 1.0)).is_err());
        assert!(k_unbounded(&RateInputs::new(1.0, 1.0, 1.0).with_target(0.1, 0.0)).is_err());
    }
}
