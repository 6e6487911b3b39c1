//! Sparse measures on finite product grids, Poissonized sampling and the
//! rank transform used to make sample sets generic.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::Poisson;

use crate::geometry::AxisRectangle;
use crate::{check_dim, Error, Result, TestRng};

/// Absolute tolerance on the total mass of a normalized distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Coordinate of the sentinel point used when a reduction needs a location
/// outside the unit cube: every axis is set to this value.
pub const SENTINEL_COORD: f64 = -1.0;

/// A nonnegative measure supported on a finite product grid.
///
/// `axes[i]` holds the strictly increasing coordinates of axis `i`; masses
/// are keyed by one index per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGridDistribution {
    axes: Vec<Vec<f64>>,
    mass: BTreeMap<Vec<usize>, f64>,
}

impl DiscreteGridDistribution {
    pub fn new(axes: Vec<Vec<f64>>, mass: BTreeMap<Vec<usize>, f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("distribution dimension must be >= 1".into()));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("axis {i} has a non-finite value")));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "axis {i} is not strictly increasing"
                )));
            }
        }
        for (idx, &w) in &mass {
            check_dim(axes.len(), idx.len())?;
            if idx.iter().zip(&axes).any(|(&j, axis)| j >= axis.len()) {
                return Err(Error::InvalidArgument(format!("index {idx:?} out of range")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!("mass {w} at {idx:?} is invalid")));
            }
        }
        Ok(Self { axes, mass })
    }

    /// Build from explicit `(point, mass)` pairs; repeated points accumulate.
    pub fn from_weighted_points(points: &[(Vec<f64>, f64)]) -> Result<Self> {
        let dim = points
            .first()
            .map(|(p, _)| p.len())
            .ok_or_else(|| Error::InvalidArgument("no support points".into()))?;
        let mut axes = vec![Vec::new(); dim];
        for (p, _) in points {
            check_dim(dim, p.len())?;
            for (axis, &v) in axes.iter_mut().zip(p) {
                axis.push(v);
            }
        }
        for axis in &mut axes {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let mut mass = BTreeMap::new();
        for (p, w) in points {
            let idx = index_of(&axes, p).expect("coordinate present by construction");
            *mass.entry(idx).or_insert(0.0) += *w;
        }
        Self::new(axes, mass)
    }

    /// Uniform mass on the grid `{1, ..., n}^d`.
    pub fn uniform_grid(n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::InvalidArgument("uniform grid needs n, d >= 1".into()));
        }
        let axis: Vec<f64> = (1..=n).map(|v| v as f64).collect();
        let total = n.pow(dim as u32);
        let w = 1.0 / total as f64;
        let mut mass = BTreeMap::new();
        for flat in 0..total {
            let mut rem = flat;
            let idx: Vec<usize> = (0..dim)
                .map(|_| {
                    let j = rem % n;
                    rem /= n;
                    j
                })
                .collect();
            mass.insert(idx, w);
        }
        Self::new(vec![axis; dim], mass)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn masses(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.mass
    }

    /// Coordinates of a grid index.
    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.axes).map(|(&j, axis)| axis[j]).collect()
    }

    /// Support points (positive mass) with their masses.
    pub fn support(&self) -> Vec<(Vec<f64>, f64)> {
        self.mass
            .iter()
            .filter(|(_, &w)| w > 0.0)
            .map(|(idx, &w)| (self.point(idx), w))
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Rescale to total mass one.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_mass();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero measure".into()));
        }
        let mass = self.mass.iter().map(|(k, w)| (k.clone(), w / total)).collect();
        Ok(Self { axes: self.axes.clone(), mass })
    }

    /// Mass of the support points inside the closed box `rect`.
    pub fn mass_of(&self, rect: &AxisRectangle) -> Result<f64> {
        check_dim(self.dim(), rect.dim())?;
        Ok(self
            .mass
            .iter()
            .filter(|(idx, _)| rect.contains_unchecked(&self.point(idx)))
            .map(|(_, w)| w)
            .sum())
    }

    /// Mass of a single point (zero off the support).
    pub fn mass_at(&self, point: &[f64]) -> f64 {
        index_of(&self.axes, point)
            .and_then(|idx| self.mass.get(&idx).copied())
            .unwrap_or(0.0)
    }

    /// `(p + q) / 2` on the union of the two grids.
    pub fn mixture_half(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let mut points: Vec<(Vec<f64>, f64)> = Vec::new();
        for (idx, w) in &self.mass {
            points.push((self.point(idx), w / 2.0));
        }
        for (idx, w) in &other.mass {
            points.push((other.point(idx), w / 2.0));
        }
        if points.is_empty() {
            let axes = (0..self.dim())
                .map(|i| merge_axes(&self.axes[i], &other.axes[i]))
                .collect();
            return Self::new(axes, BTreeMap::new());
        }
        Self::from_weighted_points(&points)
    }

    /// Apply a strictly increasing map to each axis. Masses are untouched.
    pub fn map_axes(&self, maps: &[&dyn Fn(f64) -> f64]) -> Result<Self> {
        check_dim(self.dim(), maps.len())?;
        let axes = self
            .axes
            .iter()
            .zip(maps)
            .map(|(axis, f)| axis.iter().map(|&v| f(v)).collect())
            .collect();
        Self::new(axes, self.mass.clone())
    }

    /// Reusable sampler for the normalized distribution.
    pub fn sampler(&self) -> Result<GridSampler> {
        GridSampler::new(self)
    }

    /// Draw `N ~ Poisson(m * total_mass)` points i.i.d. from the normalized
    /// distribution.
    pub fn sample_poisson<R: Rng + ?Sized>(&self, m: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("Poisson rate m must be > 0, got {m}")));
        }
        let sampler = self.sampler()?;
        let n = poisson(m * self.total_mass(), rng)?;
        Ok((0..n).map(|_| sampler.sample(rng)).collect())
    }
}

fn merge_axes(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn index_of(axes: &[Vec<f64>], point: &[f64]) -> Option<Vec<usize>> {
    if axes.len() != point.len() {
        return None;
    }
    axes.iter()
        .zip(point)
        .map(|(axis, v)| axis.binary_search_by(|x| x.total_cmp(v)).ok())
        .collect()
}

/// Draw from `Poisson(lambda)`; zero rate gives zero.
pub fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda)
        .map_err(|e| Error::InvalidArgument(format!("Poisson rate {lambda}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Weighted sampler over the support of a [`DiscreteGridDistribution`].
#[derive(Debug, Clone)]
pub struct GridSampler {
    points: Vec<Vec<f64>>,
    index: WeightedIndex<f64>,
}

impl GridSampler {
    pub fn new(dist: &DiscreteGridDistribution) -> Result<Self> {
        let (points, weights): (Vec<_>, Vec<_>) = dist.support().into_iter().unzip();
        if points.is_empty() {
            return Err(Error::InvalidArgument("distribution has zero total mass".into()));
        }
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidArgument(format!("bad weights: {e}")))?;
        Ok(Self { points, index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.points[self.index.sample(rng)].clone()
    }
}

/// Which of the two distributions produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    P,
    Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub point: Vec<f64>,
    pub label: Source,
}

/// A sample after the rank transform: per axis, coordinates are a
/// permutation of `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedSample {
    pub ranks: Vec<usize>,
    pub label: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSampleSet {
    samples: Vec<RankedSample>,
    dim: usize,
    tie_break_seed: u64,
    /// Per axis, the original coordinates in rank order.
    sorted_values: Vec<Vec<f64>>,
}

impl RankedSampleSet {
    pub fn samples(&self) -> &[RankedSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Seed of the generator that broke ties.
    pub fn tie_break_seed(&self) -> u64 {
        self.tie_break_seed
    }

    /// Points with integer rank coordinates.
    pub fn rank_points(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| s.ranks.iter().map(|&r| r as f64).collect())
            .collect()
    }

    /// Map a fresh point into rank space.
    ///
    /// Along each axis the fresh value lands strictly between two consecutive
    /// ranks, at `r + 0.5` where `r` counts the ranked values below it. When the
    /// value ties with a block of ranked values, its slot inside the block is
    /// uniform, which is how an independent draw from the tie-stretched
    /// distribution would fall.
    pub fn embed<R: Rng + ?Sized>(&self, point: &[f64], rng: &mut R) -> Vec<f64> {
        debug_assert_eq!(point.len(), self.dim);
        self.sorted_values
            .iter()
            .zip(point)
            .map(|(vals, &v)| {
                let below = vals.partition_point(|&x| x < v);
                let upto = vals.partition_point(|&x| x <= v);
                let tied = upto - below;
                let slot = if tied == 0 { 0 } else { rng.random_range(0..=tied) };
                (below + slot) as f64 + 0.5
            })
            .collect()
    }
}

/// Replace each coordinate by its rank `1..=m` on its axis, breaking ties
/// uniformly at random. Labels and the pairing of coordinates across axes are
/// kept.
pub fn rank_transform<R: RngCore + ?Sized>(
    samples: &[LabeledSample],
    rng: &mut R,
) -> Result<RankedSampleSet> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("rank transform of an empty sample".into()))?;
    let dim = first.point.len();
    for s in samples {
        check_dim(dim, s.point.len())?;
    }
    let tie_break_seed = rng.next_u64();
    let mut tie_rng = TestRng::seed_from_u64(tie_break_seed);
    let m = samples.len();
    let mut ranks = vec![vec![0usize; dim]; m];
    let mut sorted_values = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut order: Vec<(f64, u64, usize)> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.point[axis], tie_rng.next_u64(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (r, &(_, _, i)) in order.iter().enumerate() {
            ranks[i][axis] = r + 1;
        }
        sorted_values.push(order.iter().map(|t| t.0).collect());
    }
    let samples = ranks
        .into_iter()
        .zip(samples)
        .map(|(ranks, s)| RankedSample { ranks, label: s.label })
        .collect();
    Ok(RankedSampleSet { samples, dim, tie_break_seed, sorted_values })
}
