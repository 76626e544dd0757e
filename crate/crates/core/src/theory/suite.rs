//! Randomized small instances and the oracle sweep run over them.

use super::{
    check_block_separable_expectation, check_eso_inequality, check_lemma3, OracleReport, TheoryError,
};
use crate::blocks::BlockLayout;
use crate::eso::{self, EsoParameter, EsoSource};
use crate::io::SparseMatrix;
use crate::model::{quadratic_strong_convexity, CompositeProblem, ModelError, Regularizer, SmoothPart};
use crate::sampling::SamplingSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random composite least-squares problem with at most 8 blocks.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub problem: CompositeProblem,
    pub samplings: Vec<SamplingSpec>,
    pub label: String,
}

const TAUS: [usize; 4] = [1, 2, 3, usize::MAX];

fn regularizer_for(kind: usize, rng: &mut ChaCha8Rng) -> Regularizer {
    match kind % 4 {
        0 => Regularizer::Zero,
        1 => Regularizer::L1 { lambda: rng.gen_range(0.01..1.0) },
        2 => Regularizer::Box { lo: -rng.gen_range(0.2..1.0), hi: rng.gen_range(0.2..1.0) },
        _ => Regularizer::SquaredL2 { mu: rng.gen_range(0.01..1.0) },
    }
}

/// Instance `index` of the sweep seeded by `seed`. Regularizer kinds and
/// `τ ∈ {1, 2, 3, n}` rotate with `index`; a random doubly uniform sampling
/// is added to every instance.
pub fn random_instance(seed: u64, index: usize) -> Result<RandomInstance, TheoryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(index as u64));
    let n = rng.gen_range(4..=8);
    let blocky = index % 3 == 2;
    let sizes: Vec<usize> = (0..n).map(|_| if blocky { rng.gen_range(1..=2) } else { 1 }).collect();
    let layout = BlockLayout::new(sizes).map_err(ModelError::from)?;
    let dim = layout.dim();
    let rows = dim + rng.gen_range(0..4);
    let mut trips = Vec::new();
    for r in 0..rows {
        for c in 0..dim {
            if rng.gen::<f64>() < 0.45 || c == r % dim {
                trips.push((r, c, rng.gen_range(-1.5..1.5)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(rows, dim, &trips).map_err(|e| TheoryError::Invalid(e.to_string()))?;
    let b: Vec<f64> = (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let metric = blocky.then(|| (0..dim).map(|_| rng.gen_range(0.5..2.0)).collect());
    let kind = index % 4;
    let regs: Vec<Regularizer> = (0..n).map(|_| regularizer_for(kind, &mut rng)).collect();
    let problem = CompositeProblem::new(SmoothPart::LeastSquares { a, b }, layout, metric, regs)?;

    let tau = TAUS[(index / 4) % 4].min(n);
    let mut probs = vec![0.0; n + 1];
    for p in probs.iter_mut().skip(1) {
        *p = rng.gen_range(0.0..1.0);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let pairs: Vec<(usize, f64)> = probs.into_iter().enumerate().collect();
    let samplings = vec![SamplingSpec::tau_nice(tau, n)?, SamplingSpec::doubly_uniform(&pairs, n)?];
    let label = format!("seed={seed} instance={index} n={n} dim={dim} tau={tau} reg={}", problem.regularizers[0]);
    Ok(RandomInstance { problem, samplings, label })
}

/// Every certified ESO applicable to `spec`.
pub fn certified_esos(problem: &CompositeProblem, spec: &SamplingSpec) -> Result<Vec<EsoParameter>, TheoryError> {
    let data = match problem.smoothness_with_sigma(1e-13, 1_000_000) {
        Ok(d) => d,
        // Nearly tied top eigenvalues: run without RT-D.
        Err(ModelError::Eso(eso::EsoError::NotConverged { .. })) => problem.smoothness()?,
        Err(e) => return Err(e.into()),
    };
    let sources: &[EsoSource] = if spec.tau().is_some() {
        &[EsoSource::RtP, EsoSource::RtD, EsoSource::Fr, EsoSource::Du, EsoSource::Nc]
    } else {
        &[EsoSource::Du, EsoSource::Nc]
    };
    let mut out = Vec::new();
    for &s in sources {
        if s == EsoSource::RtD && data.sigma.is_none() {
            continue;
        }
        out.push(eso::build_eso(s, &data, spec).map_err(ModelError::from)?);
    }
    Ok(out)
}

/// A random point in the domain of `Ψ`.
pub fn random_feasible(problem: &CompositeProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = vec![0.0; problem.dim()];
    for i in 0..problem.n_blocks() {
        let (lo, hi) = match problem.regularizers[i] {
            Regularizer::Box { lo, hi } => (lo, hi),
            _ => (-1.5, 1.5),
        };
        for c in problem.layout.range(i) {
            x[c] = rng.gen_range(lo..=hi);
        }
    }
    x
}

/// Strong convexity constants of a least-squares instance w.r.t. `||·||_v`,
/// shrunk slightly so that eigensolver rounding cannot overstate them.
pub fn strong_convexity(problem: &CompositeProblem, v: &[f64]) -> Result<(f64, f64), TheoryError> {
    let mu_f = match &problem.smooth {
        SmoothPart::LeastSquares { a, .. } => quadratic_strong_convexity(a, &problem.layout, &problem.metric, v)?,
        _ => 0.0,
    };
    let mu_f = (mu_f * (1.0 - 1e-9) - 1e-12).max(0.0);
    Ok((mu_f, problem.regularizer_strong_convexity(v)))
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    pub instances: usize,
    /// Random `(x, h)` pairs per ESO in the ESO check.
    pub eso_trials: usize,
    /// Random points per instance for the separable-expectation and descent checks.
    pub points: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 7, instances: 50, eso_trials: 20, points: 5 }
    }
}

/// Runs the three oracles over `cfg.instances` random instances and returns
/// one merged report per oracle.
pub fn run_oracle_suite(cfg: &SuiteConfig) -> Result<Vec<OracleReport>, TheoryError> {
    let mut eso_r: Option<OracleReport> = None;
    let mut sep_r: Option<OracleReport> = None;
    let mut l3_r: Option<OracleReport> = None;
    let merge = |acc: &mut Option<OracleReport>, mut r: OracleReport, label: &str| {
        r.worst = format!("{label}: {}", r.worst);
        *acc = Some(match acc.take() {
            None => r,
            Some(a) => a.merge(r),
        });
    };
    for index in 0..cfg.instances {
        let inst = random_instance(cfg.seed, index)?;
        let p = &inst.problem;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0xA5A5_0000 + index as u64));
        for spec in &inst.samplings {
            for e in certified_esos(p, spec)? {
                let r = check_eso_inequality(p, spec, &e.v, cfg.eso_trials, rng.gen())?;
                merge(&mut eso_r, r, &format!("{} eso={}", inst.label, e.source));
            }
            for _ in 0..cfg.points {
                let x = random_feasible(p, &mut rng);
                let xh = random_feasible(p, &mut rng);
                let h: Vec<f64> = xh.iter().zip(&x).map(|(a, b)| a - b).collect();
                let r = check_block_separable_expectation(p, spec, &x, &h)?;
                merge(&mut sep_r, r, &inst.label);
            }
            let v = match spec.tau() {
                Some(tau) => eso::eso_fr(&p.smoothness()?, tau, spec.n()).map_err(ModelError::from)?.v,
                None => eso::eso_du(&p.smoothness()?, spec.cardinality_moments(), spec.n())
                    .map_err(ModelError::from)?
                    .v,
            };
            let (mu_f, mu_psi) = strong_convexity(p, &v)?;
            for _ in 0..cfg.points {
                let x = random_feasible(p, &mut rng);
                let y = random_feasible(p, &mut rng);
                let r = check_lemma3(p, spec, &v, &x, &y, mu_f, mu_psi)?;
                merge(&mut l3_r, r, &inst.label);
            }
        }
    }
    Ok([eso_r, sep_r, l3_r].into_iter().flatten().collect())
}
