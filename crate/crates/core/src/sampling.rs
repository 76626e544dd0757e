//! Uniform block samplings: τ-nice, doubly uniform, nonoverlapping and serial.
//!
//! Every sampling here is uniform, i.e. `P(i ∈ Ŝ) = E|Ŝ| / n` for all blocks.
//! Subsets are returned as sorted block indices.

use itertools::Itertools;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest support `enumerate_support` will materialize.
pub const MAX_SUPPORT: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("invalid sampling: {0}")]
    Invalid(String),
    #[error("sampling is not proper: E|S| = 0")]
    Improper,
    #[error("support of size {size} exceeds the enumeration limit {limit}")]
    SupportTooLarge { size: f64, limit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingKind {
    /// Uniform over all subsets of size τ.
    TauNice(usize),
    /// Cardinality drawn from `q` (indexed by cardinality `0..=n`), then a
    /// uniform subset of that size.
    DoublyUniform(Vec<f64>),
    /// One part of an explicit partition, chosen uniformly.
    NonoverlappingPartition(Vec<Vec<usize>>),
    /// A single uniformly chosen block.
    SerialUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    kind: SamplingKind,
    n: usize,
}

impl SamplingSpec {
    pub fn new(kind: SamplingKind, n: usize) -> Result<Self, SamplingError> {
        if n == 0 {
            return Err(SamplingError::Invalid("no blocks".into()));
        }
        match &kind {
            SamplingKind::TauNice(tau) => {
                if *tau == 0 || *tau > n {
                    return Err(SamplingError::Invalid(format!("tau = {tau} not in 1..={n}")));
                }
            }
            SamplingKind::DoublyUniform(q) => {
                if q.len() != n + 1 {
                    return Err(SamplingError::Invalid(format!(
                        "cardinality distribution needs {} entries, got {}",
                        n + 1,
                        q.len()
                    )));
                }
                if q.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                    return Err(SamplingError::Invalid("negative cardinality probability".into()));
                }
                let total: f64 = q.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(SamplingError::Invalid(format!("q sums to {total}, not 1")));
                }
                let mean: f64 = q.iter().enumerate().map(|(c, p)| c as f64 * p).sum();
                if mean <= 0.0 {
                    return Err(SamplingError::Improper);
                }
            }
            SamplingKind::NonoverlappingPartition(parts) => {
                let mut seen = vec![false; n];
                for part in parts {
                    if part.is_empty() {
                        return Err(SamplingError::Invalid("empty part".into()));
                    }
                    for &i in part {
                        if i >= n {
                            return Err(SamplingError::Invalid(format!("block {i} out of range")));
                        }
                        if seen[i] {
                            return Err(SamplingError::Invalid(format!("block {i} in two parts")));
                        }
                        seen[i] = true;
                    }
                }
                if !seen.iter().all(|&s| s) {
                    return Err(SamplingError::Invalid("partition does not cover every block".into()));
                }
            }
            SamplingKind::SerialUniform => {}
        }
        let kind = match kind {
            SamplingKind::NonoverlappingPartition(parts) => SamplingKind::NonoverlappingPartition(
                parts.into_iter().map(|mut p| {
                    p.sort_unstable();
                    p
                })
                .collect(),
            ),
            k => k,
        };
        Ok(SamplingSpec { kind, n })
    }

    pub fn tau_nice(tau: usize, n: usize) -> Result<Self, SamplingError> {
        Self::new(SamplingKind::TauNice(tau), n)
    }

    pub fn serial(n: usize) -> Result<Self, SamplingError> {
        Self::new(SamplingKind::SerialUniform, n)
    }

    /// Doubly uniform sampling from `(cardinality, probability)` pairs.
    pub fn doubly_uniform(pairs: &[(usize, f64)], n: usize) -> Result<Self, SamplingError> {
        let mut q = vec![0.0; n + 1];
        for &(c, p) in pairs {
            if c > n {
                return Err(SamplingError::Invalid(format!("cardinality {c} exceeds n = {n}")));
            }
            q[c] += p;
        }
        Self::new(SamplingKind::DoublyUniform(q), n)
    }

    pub fn partition(parts: Vec<Vec<usize>>, n: usize) -> Result<Self, SamplingError> {
        Self::new(SamplingKind::NonoverlappingPartition(parts), n)
    }

    pub fn kind(&self) -> &SamplingKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `τ` when the sampling is τ-nice (serial counts as 1-nice).
    pub fn tau(&self) -> Option<usize> {
        match self.kind {
            SamplingKind::TauNice(t) => Some(t),
            SamplingKind::SerialUniform => Some(1),
            _ => None,
        }
    }

    /// `(E|Ŝ|, E|Ŝ|²)`
    pub fn cardinality_moments(&self) -> (f64, f64) {
        match &self.kind {
            SamplingKind::TauNice(t) => {
                let t = *t as f64;
                (t, t * t)
            }
            SamplingKind::SerialUniform => (1.0, 1.0),
            SamplingKind::DoublyUniform(q) => q.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (c, p)| {
                let c = c as f64;
                (m1 + c * p, m2 + c * c * p)
            }),
            SamplingKind::NonoverlappingPartition(parts) => {
                let k = parts.len() as f64;
                parts.iter().fold((0.0, 0.0), |(m1, m2), p| {
                    let c = p.len() as f64;
                    (m1 + c / k, m2 + c * c / k)
                })
            }
        }
    }

    /// `α = E|Ŝ| / n`
    pub fn alpha(&self) -> Result<f64, SamplingError> {
        let (m1, _) = self.cardinality_moments();
        if m1 <= 0.0 {
            return Err(SamplingError::Improper);
        }
        Ok(m1 / self.n as f64)
    }

    /// Number of subsets with positive probability.
    pub fn support_size(&self) -> f64 {
        match &self.kind {
            SamplingKind::TauNice(t) => binomial(self.n, *t),
            SamplingKind::SerialUniform => self.n as f64,
            SamplingKind::DoublyUniform(q) => q
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(c, _)| binomial(self.n, c))
                .sum(),
            SamplingKind::NonoverlappingPartition(parts) => parts.len() as f64,
        }
    }

    /// Every subset with positive probability, with its probability.
    pub fn enumerate_support(&self) -> Result<Vec<(Vec<usize>, f64)>, SamplingError> {
        let size = self.support_size();
        if size > MAX_SUPPORT as f64 {
            return Err(SamplingError::SupportTooLarge { size, limit: MAX_SUPPORT });
        }
        let n = self.n;
        let out = match &self.kind {
            SamplingKind::TauNice(t) => {
                let p = 1.0 / binomial(n, *t);
                (0..n).combinations(*t).map(|s| (s, p)).collect()
            }
            SamplingKind::SerialUniform => (0..n).map(|i| (vec![i], 1.0 / n as f64)).collect(),
            SamplingKind::DoublyUniform(q) => {
                let mut out = Vec::new();
                for (c, &qc) in q.iter().enumerate() {
                    if qc <= 0.0 {
                        continue;
                    }
                    let p = qc / binomial(n, c);
                    out.extend((0..n).combinations(c).map(|s| (s, p)));
                }
                out
            }
            SamplingKind::NonoverlappingPartition(parts) => {
                let p = 1.0 / parts.len() as f64;
                parts.iter().map(|s| (s.clone(), p)).collect()
            }
        };
        Ok(out)
    }
}

/// `C(n, k)` as a float; exact for the sizes the enumeration guard admits.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// Draws subsets from a [`SamplingSpec`] with its own seeded generator.
///
/// The generator is ChaCha8 seeded from a `u64`, so a run's subset sequence is
/// fixed by its seed. Draws happen on one thread.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplingSpec,
    rng: ChaCha8Rng,
    perm: Vec<usize>,
    cardinality: Option<WeightedIndex<f64>>,
}

impl Sampler {
    pub fn new(spec: SamplingSpec, seed: u64) -> Self {
        let cardinality = match spec.kind() {
            SamplingKind::DoublyUniform(q) => Some(WeightedIndex::new(q).expect("validated distribution")),
            _ => None,
        };
        let perm = (0..spec.n()).collect();
        Sampler { spec, rng: ChaCha8Rng::seed_from_u64(seed), perm, cardinality }
    }

    pub fn spec(&self) -> &SamplingSpec {
        &self.spec
    }

    /// Next subset, sorted ascending.
    pub fn draw(&mut self) -> Vec<usize> {
        let mut out = Vec::new();
        self.draw_into(&mut out);
        out
    }

    pub fn draw_into(&mut self, out: &mut Vec<usize>) {
        out.clear();
        let n = self.spec.n();
        match self.spec.kind() {
            SamplingKind::TauNice(t) => {
                let t = *t;
                self.partial_shuffle(t);
                out.extend_from_slice(&self.perm[..t]);
            }
            SamplingKind::SerialUniform => out.push(self.rng.gen_range(0..n)),
            SamplingKind::DoublyUniform(_) => {
                let c = self.cardinality.as_ref().unwrap().sample(&mut self.rng);
                self.partial_shuffle(c);
                out.extend_from_slice(&self.perm[..c]);
            }
            SamplingKind::NonoverlappingPartition(parts) => {
                let k = self.rng.gen_range(0..parts.len());
                out.extend_from_slice(&parts[k]);
            }
        }
        out.sort_unstable();
    }

    // Partial Fisher-Yates: the first `t` slots become a uniform t-subset
    // whatever permutation the buffer currently holds.
    fn partial_shuffle(&mut self, t: usize) {
        let n = self.perm.len();
        for j in 0..t {
            let k = self.rng.gen_range(j..n);
            self.perm.swap(j, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::HashMap;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn full_tau_is_everything() {
        let mut s = Sampler::new(SamplingSpec::tau_nice(5, 5).unwrap(), 1);
        for _ in 0..20 {
            assert_eq!(s.draw(), vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn alpha_values() {
        assert_relative_eq!(SamplingSpec::tau_nice(512, 2000).unwrap().alpha().unwrap(), 0.256);
        assert_relative_eq!(SamplingSpec::serial(7).unwrap().alpha().unwrap(), 1.0 / 7.0);
        let du = SamplingSpec::doubly_uniform(&[(1, 0.5), (2, 0.5)], 4).unwrap();
        assert_relative_eq!(du.alpha().unwrap(), 1.5 / 4.0);
    }

    #[test]
    fn moments() {
        assert_eq!(SamplingSpec::tau_nice(3, 9).unwrap().cardinality_moments(), (3.0, 9.0));
        assert_eq!(SamplingSpec::serial(4).unwrap().cardinality_moments(), (1.0, 1.0));
        let du = SamplingSpec::doubly_uniform(&[(1, 0.5), (3, 0.5)], 4).unwrap();
        assert_eq!(du.cardinality_moments(), (2.0, 5.0));
    }

    #[test]
    fn improper_and_invalid_specs() {
        assert_eq!(
            SamplingSpec::doubly_uniform(&[(0, 1.0)], 3).unwrap_err(),
            SamplingError::Improper
        );
        assert!(SamplingSpec::tau_nice(0, 3).is_err());
        assert!(SamplingSpec::tau_nice(4, 3).is_err());
        assert!(SamplingSpec::doubly_uniform(&[(1, 0.3)], 3).is_err());
        assert!(SamplingSpec::partition(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(SamplingSpec::partition(vec![vec![0]], 2).is_err());
    }

    #[test]
    fn support_examples() {
        let sup = SamplingSpec::tau_nice(2, 4).unwrap().enumerate_support().unwrap();
        assert_eq!(sup.len(), 6);
        assert!(sup.iter().all(|(_, p)| (*p - 1.0 / 6.0).abs() < 1e-15));

        let sup = SamplingSpec::partition(vec![vec![0, 1], vec![2]], 3).unwrap().enumerate_support().unwrap();
        assert_eq!(sup, vec![(vec![0, 1], 0.5), (vec![2], 0.5)]);

        let sup = SamplingSpec::doubly_uniform(&[(1, 0.4), (2, 0.6)], 3)
            .unwrap()
            .enumerate_support()
            .unwrap();
        assert_eq!(sup.len(), 6);
        for (s, p) in sup {
            let expect = if s.len() == 1 { 0.4 / 3.0 } else { 0.6 / 3.0 };
            assert_relative_eq!(p, expect, max_relative = 1e-15);
        }
    }

    #[test]
    fn support_guard() {
        let spec = SamplingSpec::tau_nice(20, 60).unwrap();
        assert!(matches!(spec.enumerate_support(), Err(SamplingError::SupportTooLarge { .. })));
    }

    fn uniform_specs() -> Vec<SamplingSpec> {
        vec![
            SamplingSpec::tau_nice(1, 5).unwrap(),
            SamplingSpec::tau_nice(3, 6).unwrap(),
            SamplingSpec::tau_nice(6, 6).unwrap(),
            SamplingSpec::serial(4).unwrap(),
            SamplingSpec::doubly_uniform(&[(0, 0.1), (2, 0.5), (5, 0.4)], 5).unwrap(),
            SamplingSpec::partition(vec![vec![0, 3], vec![1, 4], vec![2, 5]], 6).unwrap(),
        ]
    }

    #[test]
    fn enumerated_marginals_are_uniform() {
        for spec in uniform_specs() {
            let sup = spec.enumerate_support().unwrap();
            let total: f64 = sup.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let (m1, _) = spec.cardinality_moments();
            let mut marg = vec![0.0; spec.n()];
            for (s, p) in &sup {
                assert!(*p > 0.0);
                for &i in s {
                    marg[i] += p;
                }
            }
            for m in marg {
                assert!((m - m1 / spec.n() as f64).abs() < 1e-12, "{spec:?}");
            }
            assert_relative_eq!(spec.alpha().unwrap() * spec.n() as f64, m1, max_relative = 1e-15);
        }
    }

    fn chi_square_p(spec: &SamplingSpec, draws: usize, seed: u64) -> f64 {
        let sup = spec.enumerate_support().unwrap();
        let index: HashMap<Vec<usize>, usize> =
            sup.iter().enumerate().map(|(k, (s, _))| (s.clone(), k)).collect();
        let mut counts = vec![0usize; sup.len()];
        let mut sampler = Sampler::new(spec.clone(), seed);
        for _ in 0..draws {
            let s = sampler.draw();
            counts[*index.get(&s).expect("drawn subset outside support")] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(&sup)
            .map(|(&o, (_, p))| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let dist = ChiSquared::new((sup.len() - 1) as f64).unwrap();
        1.0 - dist.cdf(stat)
    }

    #[test]
    fn tau_nice_draws_pass_chi_square() {
        let spec = SamplingSpec::tau_nice(2, 6).unwrap();
        assert!(chi_square_p(&spec, 100_000, 11) > 0.001);
    }

    #[test]
    fn every_kind_matches_its_support() {
        for (k, spec) in uniform_specs().into_iter().enumerate() {
            if spec.support_size() < 2.0 {
                continue;
            }
            assert!(chi_square_p(&spec, 40_000, 100 + k as u64) > 0.001, "{spec:?}");
        }
    }

    #[test]
    fn serial_is_uniform_singleton() {
        let mut s = Sampler::new(SamplingSpec::serial(3).unwrap(), 5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let d = s.draw();
            assert_eq!(d.len(), 1);
            counts[d[0]] += 1;
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let spec = SamplingSpec::tau_nice(4, 20).unwrap();
        let mut a = Sampler::new(spec.clone(), 9);
        let mut b = Sampler::new(spec, 9);
        for _ in 0..100 {
            assert_eq!(a.draw(), b.draw());
        }
    }
}
