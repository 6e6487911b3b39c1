//! Split distributions, the Poissonized `l2` statistic, and the two `l2`
//! closeness testers built on it.
//!
//! Flattening draws a multiset `S` of samples and splits each domain element
//! `i` into `a_i = 1 + count_S(i)` equally weighted copies. This keeps `l1`
//! distances intact while lowering the `l2` norm of heavy elements, which is
//! what makes an `l2` tester usable on skewed distributions.

use rustc_hash::FxHashMap as HashMap;
use std::hash::Hash;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::distributions::poisson;
use crate::{Error, Result};

/// Pull-style sample access. `None` means the source cannot produce samples.
pub trait SampleAccess<T> {
    fn sample(&mut self, rng: &mut dyn RngCore) -> Option<T>;
}

impl<T, F> SampleAccess<T> for F
where
    F: FnMut(&mut dyn RngCore) -> Option<T>,
{
    fn sample(&mut self, rng: &mut dyn RngCore) -> Option<T> {
        self(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Outcome of a test. `decision` is `Reject` exactly when
/// `statistic >= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub decision: Decision,
    pub statistic: f64,
    pub threshold: f64,
    pub samples_used: u64,
    /// Squared `l2` accuracy handed to the final stage, when the verdict
    /// comes from the full tester.
    pub kappa: Option<f64>,
}

impl TestVerdict {
    fn from_statistic(statistic: f64, threshold: f64, samples_used: u64) -> Self {
        let decision = if statistic >= threshold { Decision::Reject } else { Decision::Accept };
        Self { decision, statistic, threshold, samples_used, kappa: None }
    }

    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }
}

/// Tuning of the `l2` testers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Params {
    /// `c_r` in `m = ceil(c_r * sqrt(b) / eps^2)`.
    pub robust_c: f64,
    /// `c_f` in the flattening size `ceil(c_f * eps^(-4/3))`.
    pub flatten_c: f64,
    /// Independent repetitions; the median statistic decides.
    pub repetitions: usize,
    /// Multiplies the Poisson rate of the robust test.
    pub sample_scale: f64,
}

impl Default for L2Params {
    fn default() -> Self {
        Self { robust_c: 4.0, flatten_c: 2.0, repetitions: 3, sample_scale: 1.0 }
    }
}

impl L2Params {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.robust_c) && positive(self.flatten_c) && positive(self.sample_scale)) {
            return Err(Error::InvalidArgument("l2 constants must be positive and finite".into()));
        }
        if self.repetitions % 2 == 0 {
            return Err(Error::InvalidArgument("repetitions must be odd".into()));
        }
        Ok(())
    }
}

/// Multiplicities `a_x = 1 + count_S(x)` of a flattening multiset `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMap<T: Hash + Eq> {
    counts: HashMap<T, u64>,
    size: u64,
    domain: Option<usize>,
}

impl<T: Hash + Eq + Clone> SplitMap<T> {
    pub fn from_samples<I: IntoIterator<Item = T>>(samples: I) -> Self {
        let mut counts = HashMap::default();
        let mut size = 0;
        for x in samples {
            *counts.entry(x).or_insert(0) += 1;
            size += 1;
        }
        Self { counts, size, domain: None }
    }

    pub fn multiplicity(&self, x: &T) -> u64 {
        1 + self.counts.get(x).copied().unwrap_or(0)
    }

    /// `|S|`.
    pub fn flattening_size(&self) -> u64 {
        self.size
    }

    /// Turn a base sample into a sample of the split distribution: the copy
    /// index `j` is uniform on `1..=a_x`.
    pub fn split_sample<R: Rng + ?Sized>(&self, x: T, rng: &mut R) -> (T, u64) {
        let a = self.multiplicity(&x);
        let j = if a == 1 { 1 } else { rng.random_range(1..=a) };
        (x, j)
    }
}

impl SplitMap<usize> {
    /// Split map on the domain `{0, ..., n-1}`.
    pub fn build(samples: &[usize], n: usize) -> Result<Self> {
        if let Some(&bad) = samples.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!("element {bad} outside domain of size {n}")));
        }
        let mut map = Self::from_samples(samples.iter().copied());
        map.domain = Some(n);
        Ok(map)
    }

    fn domain_size(&self) -> usize {
        self.domain.expect("built with an explicit domain")
    }

    pub fn multiplicities(&self) -> Vec<u64> {
        (0..self.domain_size()).map(|i| self.multiplicity(&i)).collect()
    }

    /// `n + |S|`.
    pub fn split_domain_size(&self) -> usize {
        self.domain_size() + self.size as usize
    }

    /// Split distribution of `dist`, listed element by element with copies
    /// `1..=a_i` adjacent: mass `dist[i] / a_i` on each copy.
    pub fn pushforward(&self, dist: &[f64]) -> Result<Vec<f64>> {
        crate::check_dim(self.domain_size(), dist.len())?;
        let mut out = Vec::with_capacity(self.split_domain_size());
        for (i, &w) in dist.iter().enumerate() {
            let a = self.multiplicity(&i);
            out.extend(std::iter::repeat_n(w / a as f64, a as usize));
        }
        Ok(out)
    }
}

/// Per-element Poissonized sample counts from the two sources.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountVector {
    pub p: Vec<u64>,
    pub q: Vec<u64>,
}

impl CountVector {
    pub fn new(p: Vec<u64>, q: Vec<u64>) -> Result<Self> {
        crate::check_dim(p.len(), q.len())?;
        Ok(Self { p, q })
    }

    /// `Z = sum_i (X_i - Y_i)^2 - X_i - Y_i`.
    pub fn statistic(&self) -> f64 {
        l2_collision_statistic(self.p.iter().copied().zip(self.q.iter().copied()))
    }
}

/// `Z` over `(X_i, Y_i)` count pairs. With `X_i ~ Poi(m p_i)` and
/// `Y_i ~ Poi(m q_i)` independent, `E[Z] = m^2 ||p - q||_2^2`.
pub fn l2_collision_statistic<I: IntoIterator<Item = (u64, u64)>>(counts: I) -> f64 {
    let z: i128 = counts
        .into_iter()
        .map(|(x, y)| {
            let (x, y) = (x as i128, y as i128);
            (x - y) * (x - y) - x - y
        })
        .sum();
    z as f64
}

fn draw<T>(access: &mut dyn SampleAccess<T>, rng: &mut dyn RngCore, which: &str) -> Result<T> {
    access
        .sample(rng)
        .ok_or_else(|| Error::DegenerateAccess(format!("{which} produced no sample")))
}

/// `l2` closeness test: `p = q` versus `||p - q||_2 > eps`, given
/// `b >= max(||p||_2^2, ||q||_2^2)`.
///
/// Each repetition draws `Poi(m)` samples from each side with
/// `m = ceil(c_r * sqrt(b) / eps^2)` and computes `Z`; the median over the
/// repetitions is compared with `m^2 eps^2 / 2`.
pub fn robust_l2_test<T: Hash + Eq>(
    p: &mut dyn SampleAccess<T>,
    q: &mut dyn SampleAccess<T>,
    b: f64,
    eps: f64,
    params: &L2Params,
    rng: &mut dyn RngCore,
) -> Result<TestVerdict> {
    params.validate()?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("norm bound b must be > 0, got {b}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let m = (params.sample_scale * params.robust_c * b.sqrt() / (eps * eps)).ceil();
    if m > 1e12 {
        return Err(Error::Overflow(format!("l2 tester budget {m:.3e} is too large")));
    }
    let mut used = 0;
    let mut stats = Vec::with_capacity(params.repetitions);
    for _ in 0..params.repetitions {
        let mut counts: HashMap<T, (u64, u64)> = HashMap::default();
        let np = poisson(m, rng)?;
        for _ in 0..np {
            counts.entry(draw(p, rng, "p")?).or_default().0 += 1;
        }
        let nq = poisson(m, rng)?;
        for _ in 0..nq {
            counts.entry(draw(q, rng, "q")?).or_default().1 += 1;
        }
        used += np + nq;
        stats.push(l2_collision_statistic(counts.into_values()));
    }
    stats.sort_by(f64::total_cmp);
    let median = stats[stats.len() / 2];
    Ok(TestVerdict::from_statistic(median, m * m * eps * eps / 2.0, used))
}

/// Size `m0 = min(floor(s / 100), ceil(c_f * eps^(-4/3)))` of the flattening
/// multiset.
pub fn flattening_size(s: u64, eps: f64, flatten_c: f64) -> u64 {
    let cap = (flatten_c * eps.powf(-4.0 / 3.0)).ceil();
    (s / 100).min(if cap >= u64::MAX as f64 { u64::MAX } else { cap as u64 })
}

/// Flatten-then-test: `p = q` versus `sum_{i in H} (p_i - q_i)^2 >= eps^2`
/// for some `H` of `s` elements of mass at most `1/s` each.
///
/// Draws `Poi(m0)` flattening samples from `(p + q) / 2`, splits both sources
/// by them, and runs [`robust_l2_test`] with `b = 40 / m0` (or `1` when
/// `m0 = 0`) at accuracy `eps / sqrt(3)`.
pub fn flatten_closeness<T: Hash + Eq + Clone>(
    p: &mut dyn SampleAccess<T>,
    q: &mut dyn SampleAccess<T>,
    s: u64,
    eps: f64,
    params: &L2Params,
    rng: &mut dyn RngCore,
) -> Result<TestVerdict> {
    params.validate()?;
    if s == 0 {
        return Err(Error::InvalidArgument("s must be >= 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let m0 = flattening_size(s, eps, params.flatten_c);
    let n0 = if m0 == 0 { 0 } else { poisson(m0 as f64, rng)? };
    let mut flat = Vec::with_capacity(n0 as usize);
    for _ in 0..n0 {
        let x = if rng.random_bool(0.5) { draw(p, rng, "p")? } else { draw(q, rng, "q")? };
        flat.push(x);
    }
    let split = SplitMap::from_samples(flat);
    let b = if m0 == 0 { 1.0 } else { 40.0 / m0 as f64 };
    let mut sp = |r: &mut dyn RngCore| p.sample(r).map(|x| split.split_sample(x, r));
    let mut sq = |r: &mut dyn RngCore| q.sample(r).map(|x| split.split_sample(x, r));
    let mut verdict = robust_l2_test(&mut sp, &mut sq, b, eps / 3f64.sqrt(), params, rng)?;
    verdict.samples_used += n0;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use rand::distr::weighted::WeightedIndex;
    use rand::distr::Distribution;

    fn finite_access(weights: &[f64]) -> impl FnMut(&mut dyn RngCore) -> Option<usize> {
        let index = WeightedIndex::new(weights).unwrap();
        move |r: &mut dyn RngCore| Some(index.sample(r))
    }

    #[test]
    fn split_map_examples() {
        assert_eq!(SplitMap::build(&[0], 2).unwrap().multiplicities(), vec![2, 1]);
        assert_eq!(SplitMap::build(&[], 3).unwrap().multiplicities(), vec![1, 1, 1]);
        let m = SplitMap::build(&[1, 1], 3).unwrap();
        assert_eq!(m.multiplicities(), vec![1, 3, 1]);
        assert_eq!(m.split_domain_size(), 5);
        assert!(SplitMap::build(&[3], 3).is_err());
    }

    #[test]
    fn split_sample_frequencies() {
        let m = SplitMap::build(&[0], 2).unwrap();
        let mut rng = rng_from_seed(2);
        assert_eq!(m.split_sample(1, &mut rng), (1, 1));
        let ones = (0..10_000).filter(|_| m.split_sample(0, &mut rng).1 == 1).count();
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn pushforward_example() {
        let m = SplitMap::build(&[0], 2).unwrap();
        assert_eq!(m.pushforward(&[0.5, 0.5]).unwrap(), vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn statistic_examples() {
        assert_eq!(CountVector::new(vec![2, 0], vec![0, 2]).unwrap().statistic(), 4.0);
        assert_eq!(CountVector::new(vec![1, 1], vec![1, 1]).unwrap().statistic(), -4.0);
        assert!(CountVector::new(vec![1], vec![1, 2]).is_err());
    }

    #[test]
    fn robust_test_rejects_bad_bound() {
        let mut p = finite_access(&[1.0]);
        let mut q = finite_access(&[1.0]);
        let mut rng = rng_from_seed(0);
        let params = L2Params::default();
        assert!(robust_l2_test(&mut p, &mut q, 0.0, 0.5, &params, &mut rng).is_err());
    }

    #[test]
    fn robust_test_accepts_equal_and_rejects_disjoint() {
        let params = L2Params::default();
        let mut rng = rng_from_seed(11);
        let uniform = vec![1.0; 100];
        let accepted = (0..100)
            .filter(|_| {
                let mut p = finite_access(&uniform);
                let mut q = finite_access(&uniform);
                !robust_l2_test(&mut p, &mut q, 0.01, 0.1, &params, &mut rng).unwrap().rejected()
            })
            .count();
        assert!(accepted >= 70, "{accepted}");
        let rejected = (0..100)
            .filter(|_| {
                let mut p = finite_access(&[1.0, 0.0]);
                let mut q = finite_access(&[0.0, 1.0]);
                robust_l2_test(&mut p, &mut q, 1.0, 0.5, &params, &mut rng).unwrap().rejected()
            })
            .count();
        assert!(rejected >= 70, "{rejected}");
    }

    #[test]
    fn flattening_size_formula() {
        assert_eq!(flattening_size(10_000, 0.1, 2.0), 44);
        assert_eq!(flattening_size(150, 0.1, 2.0), 1);
        assert_eq!(flattening_size(99, 0.1, 2.0), 0);
    }

    #[test]
    fn degenerate_access_is_an_error() {
        let mut p = |_: &mut dyn RngCore| None::<usize>;
        let mut q = finite_access(&[1.0]);
        let mut rng = rng_from_seed(0);
        let err = flatten_closeness(&mut p, &mut q, 10_000, 0.5, &L2Params::default(), &mut rng);
        assert!(matches!(err, Err(Error::DegenerateAccess(_))));
        assert!(flatten_closeness(&mut q, &mut finite_access(&[1.0]), 0, 0.5, &L2Params::default(), &mut rng).is_err());
    }
}
