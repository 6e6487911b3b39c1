//! Sample-point grids, the dyadic grid covering, and induced outcomes.
//!
//! For a grid with `m + 1` values per axis (`m` a power of two), level `i` of
//! an axis (`1 <= i <= log2 m`) splits the `m` gaps between consecutive grid
//! values into `2^i` runs of `m / 2^i` gaps. A family rectangle picks one such
//! interval per axis. Intervals are half-open `[left, right)` except the last
//! one of each level, which is closed, so every point of the grid span lies in
//! exactly one interval per level and in exactly `(log2 m)^d` family
//! rectangles.

use std::collections::BTreeMap;

use rand::Rng;

use crate::distributions::{DiscreteGridDistribution, RankedSampleSet};
use crate::geometry::{AxisRectangle, PointSet};
use crate::{check_dim, Error, Result};

const AXIS_BITS: u32 = 32;
const INDEX_BITS: u32 = 26;
const INDEX_MASK: u128 = (1 << INDEX_BITS) - 1;

/// Largest supported dimension for packed family keys.
pub const MAX_DIM: usize = 4;
/// Largest supported number of levels per axis.
pub const MAX_LEVELS: u32 = INDEX_BITS;

/// Per-axis sorted coordinates of a generic set of `m + 1` points.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePointGrid {
    axis_values: Vec<Vec<f64>>,
}

impl SamplePointGrid {
    /// Build from a generic point set of size `m + 1`, `m >= 2` a power of two.
    pub fn build(set: &PointSet) -> Result<Self> {
        set.require_generic()?;
        let n = set.len();
        let m = n.saturating_sub(1);
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid needs m + 1 points with m >= 2 a power of two, got {n} points"
            )));
        }
        if set.dim() == 0 || set.dim() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be in 1..={MAX_DIM}, got {}",
                set.dim()
            )));
        }
        if m.trailing_zeros() > MAX_LEVELS {
            return Err(Error::InvalidArgument(format!("grid with m = {m} is too large")));
        }
        let axis_values = (0..set.dim())
            .map(|axis| {
                let mut col: Vec<f64> = set.points().iter().map(|p| p[axis]).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Ok(Self { axis_values })
    }

    /// Build from a rank-transformed sample (already generic).
    pub fn from_ranked(set: &RankedSampleSet) -> Result<Self> {
        Self::build(&PointSet::new(set.rank_points())?)
    }

    pub fn dim(&self) -> usize {
        self.axis_values.len()
    }

    /// Number of gaps per axis.
    pub fn m(&self) -> usize {
        self.axis_values[0].len() - 1
    }

    pub fn axis_values(&self) -> &[Vec<f64>] {
        &self.axis_values
    }
}

/// A family rectangle: one `(level, index)` pair per axis, packed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyKey(u128);

impl FamilyKey {
    pub fn new(parts: &[(u32, usize)]) -> Result<Self> {
        if parts.is_empty() || parts.len() > MAX_DIM {
            return Err(Error::InvalidArgument("family key needs 1..=4 axes".into()));
        }
        let mut key = 0u128;
        for (axis, &(level, index)) in parts.iter().enumerate() {
            if level == 0 || level > MAX_LEVELS || index >= (1usize << level) {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis}: invalid (level {level}, index {index})"
                )));
            }
            key |= pack(level, index) << (AXIS_BITS * axis as u32);
        }
        Ok(Self(key))
    }

    /// `(level, index)` on `axis`.
    pub fn part(&self, axis: usize) -> (u32, usize) {
        let bits = (self.0 >> (AXIS_BITS * axis as u32)) & ((1u128 << AXIS_BITS) - 1);
        ((bits >> INDEX_BITS) as u32, (bits & INDEX_MASK) as usize)
    }

    pub fn parts(&self, dim: usize) -> Vec<(u32, usize)> {
        (0..dim).map(|a| self.part(a)).collect()
    }
}

fn pack(level: u32, index: usize) -> u128 {
    ((level as u128) << INDEX_BITS) | index as u128
}

/// An outcome of the induced distribution: a family rectangle, or the
/// special element for points outside the grid span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InducedOutcome {
    Rect(FamilyKey),
    Empty,
}

/// The dyadic grid covering of a [`SamplePointGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverFamily {
    grid: SamplePointGrid,
    levels: u32,
}

impl CoverFamily {
    pub fn build(grid: &SamplePointGrid) -> Self {
        Self { grid: grid.clone(), levels: grid.m().trailing_zeros() }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    /// `log2 m`: intervals per axis containing any span point.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// `(log2 m)^d`: family rectangles containing any span point.
    pub fn multiplicity(&self) -> usize {
        (self.levels as usize).pow(self.dim() as u32)
    }

    /// Number of intervals per axis, `2 + 4 + ... + m`.
    pub fn intervals_per_axis(&self) -> usize {
        2 * self.m() - 2
    }

    pub fn grid(&self) -> &SamplePointGrid {
        &self.grid
    }

    /// Gap range `[start, end)` of an interval.
    fn gap_range(&self, level: u32, index: usize) -> (usize, usize) {
        let width = self.m() >> level;
        (index * width, (index + 1) * width)
    }

    /// Endpoints of an interval and whether the right end is included.
    pub fn interval(&self, axis: usize, level: u32, index: usize) -> (f64, f64, bool) {
        let (a, b) = self.gap_range(level, index);
        let vals = &self.grid.axis_values[axis];
        (vals[a], vals[b], b == self.m())
    }

    /// The closed box spanned by a family rectangle.
    pub fn rect_bounds(&self, key: FamilyKey) -> AxisRectangle {
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..self.dim())
            .map(|axis| {
                let (level, index) = key.part(axis);
                let (l, r, _) = self.interval(axis, level, index);
                (l, r)
            })
            .unzip();
        AxisRectangle::new(lo, hi).expect("grid values are increasing")
    }

    /// Gap containing `v` on `axis` under the half-open convention, or
    /// `None` outside `[v_0, v_m]`.
    pub fn gap_of(&self, axis: usize, v: f64) -> Option<usize> {
        let vals = &self.grid.axis_values[axis];
        if !(vals[0] <= v && v <= vals[self.m()]) {
            return None;
        }
        let g = vals.partition_point(|&x| x <= v) - 1;
        Some(g.min(self.m() - 1))
    }

    /// Membership of `z` in a family rectangle (half-open convention).
    pub fn contains(&self, key: FamilyKey, z: &[f64]) -> bool {
        (0..self.dim()).all(|axis| {
            let (level, index) = key.part(axis);
            self.gap_of(axis, z[axis])
                .is_some_and(|g| g >> (self.levels - level) == index)
        })
    }

    /// All `(log2 m)^d` family rectangles containing `z`, or `None` when `z`
    /// is outside the span.
    pub fn containing(&self, z: &[f64]) -> Result<Option<Vec<FamilyKey>>> {
        check_dim(self.dim(), z.len())?;
        let mut gaps = Vec::with_capacity(self.dim());
        for (axis, &v) in z.iter().enumerate() {
            match self.gap_of(axis, v) {
                Some(g) => gaps.push(g),
                None => return Ok(None),
            }
        }
        let mut keys = vec![0u128];
        for (axis, &g) in gaps.iter().enumerate() {
            let shift = AXIS_BITS * axis as u32;
            keys = keys
                .into_iter()
                .flat_map(|k| {
                    (1..=self.levels)
                        .map(move |level| k | (pack(level, g >> (self.levels - level)) << shift))
                })
                .collect();
        }
        Ok(Some(keys.into_iter().map(FamilyKey).collect()))
    }

    /// Push a point through the induced distribution: a uniformly random
    /// family rectangle containing it, or [`InducedOutcome::Empty`].
    pub fn induced_outcome<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R) -> InducedOutcome {
        let mut key = 0u128;
        for (axis, &v) in z.iter().enumerate() {
            let Some(g) = self.gap_of(axis, v) else {
                return InducedOutcome::Empty;
            };
            let level = rng.random_range(1..=self.levels);
            key |= pack(level, g >> (self.levels - level)) << (AXIS_BITS * axis as u32);
        }
        InducedOutcome::Rect(FamilyKey(key))
    }

    /// Exact induced measure: each support point inside the span spreads its
    /// mass evenly over its `(log2 m)^d` containers; mass outside the span goes
    /// to [`InducedOutcome::Empty`].
    pub fn induced_distribution(
        &self,
        dist: &DiscreteGridDistribution,
    ) -> Result<BTreeMap<InducedOutcome, f64>> {
        check_dim(self.dim(), dist.dim())?;
        let share = 1.0 / self.multiplicity() as f64;
        let mut out = BTreeMap::new();
        for (point, w) in dist.support() {
            match self.containing(&point)? {
                Some(keys) => {
                    for key in keys {
                        *out.entry(InducedOutcome::Rect(key)).or_insert(0.0) += w * share;
                    }
                }
                None => *out.entry(InducedOutcome::Empty).or_insert(0.0) += w,
            }
        }
        Ok(out)
    }

    /// Mass of a family rectangle's region (half-open convention).
    pub fn region_mass(&self, dist: &DiscreteGridDistribution, key: FamilyKey) -> f64 {
        dist.support()
            .iter()
            .filter(|(p, _)| self.contains(key, p))
            .map(|(_, w)| w)
            .sum()
    }

    /// Split a grid-aligned box into disjoint family rectangles.
    ///
    /// Per axis the gap range is split into canonical dyadic intervals (at
    /// most two per level); the result is their product, at most
    /// `(2 log2 m)^d` pieces.
    pub fn decompose_grid_rect(&self, rect: &AxisRectangle) -> Result<Vec<FamilyKey>> {
        check_dim(self.dim(), rect.dim())?;
        let mut per_axis = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let vals = &self.grid.axis_values[axis];
            let find = |v: f64| {
                vals.binary_search_by(|x| x.total_cmp(&v)).map_err(|_| {
                    Error::InvalidArgument(format!("axis {axis}: {v} is not a grid value"))
                })
            };
            let a = find(rect.lo()[axis])?;
            let b = find(rect.hi()[axis])?;
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis}: zero-width rectangle covers no grid cell"
                )));
            }
            let mut parts = Vec::new();
            self.dyadic_cover(0, 0, a, b, &mut parts);
            per_axis.push(parts);
        }
        let mut keys = vec![0u128];
        for (axis, parts) in per_axis.iter().enumerate() {
            let shift = AXIS_BITS * axis as u32;
            keys = keys
                .iter()
                .flat_map(|&k| parts.iter().map(move |&(l, i)| k | (pack(l, i) << shift)))
                .collect();
        }
        Ok(keys.into_iter().map(FamilyKey).collect())
    }

    fn dyadic_cover(&self, level: u32, index: usize, a: usize, b: usize, out: &mut Vec<(u32, usize)>) {
        let (lo, hi) = self.gap_range(level, index);
        if hi <= a || b <= lo {
            return;
        }
        if level >= 1 && a <= lo && hi <= b {
            out.push((level, index));
            return;
        }
        self.dyadic_cover(level + 1, 2 * index, a, b, out);
        self.dyadic_cover(level + 1, 2 * index + 1, a, b, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    fn line(values: &[f64]) -> CoverFamily {
        let pts = values.iter().map(|&v| vec![v]).collect();
        CoverFamily::build(&SamplePointGrid::build(&PointSet::new(pts).unwrap()).unwrap())
    }

    #[test]
    fn grid_examples() {
        let pts = PointSet::new(vec![vec![3.0], vec![1.0], vec![4.0], vec![2.0], vec![5.0]]).unwrap();
        let g = SamplePointGrid::build(&pts).unwrap();
        assert_eq!(g.axis_values(), &[vec![1.0, 2.0, 3.0, 4.0, 5.0]]);
        assert_eq!(g.m(), 4);

        let tied = PointSet::new(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(SamplePointGrid::build(&tied).is_err());
        let four = PointSet::new((0..4).map(|i| vec![i as f64]).collect()).unwrap();
        assert!(SamplePointGrid::build(&four).is_err());
    }

    #[test]
    fn levels_for_m4() {
        let f = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(f.levels(), 2);
        assert_eq!(f.interval(0, 1, 0), (1.0, 3.0, false));
        assert_eq!(f.interval(0, 1, 1), (3.0, 5.0, true));
        let level2: Vec<_> = (0..4).map(|i| f.interval(0, 2, i)).collect();
        assert_eq!(
            level2,
            vec![(1.0, 2.0, false), (2.0, 3.0, false), (3.0, 4.0, false), (4.0, 5.0, true)]
        );
        assert_eq!(f.intervals_per_axis(), 6);
        for v in [1.0, 2.0, 3.0, 4.0, 5.0] {
            assert_eq!(f.containing(&[v]).unwrap().unwrap().len(), 2);
        }
        assert!(f.containing(&[0.5]).unwrap().is_none());
    }

    #[test]
    fn decompose_examples() {
        let f = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let full = AxisRectangle::new(vec![1.0], vec![5.0]).unwrap();
        let parts = f.decompose_grid_rect(&full).unwrap();
        let bounds: Vec<_> = parts.iter().map(|&k| f.rect_bounds(k)).collect();
        assert_eq!(
            bounds,
            vec![
                AxisRectangle::new(vec![1.0], vec![3.0]).unwrap(),
                AxisRectangle::new(vec![3.0], vec![5.0]).unwrap()
            ]
        );
        let one = FamilyKey::new(&[(2, 1)]).unwrap();
        assert_eq!(f.decompose_grid_rect(&f.rect_bounds(one)).unwrap(), vec![one]);
        let off = AxisRectangle::new(vec![1.5], vec![5.0]).unwrap();
        assert!(f.decompose_grid_rect(&off).is_err());
    }

    #[test]
    fn induced_outcome_outside_and_uniform_inside() {
        let f = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let mut rng = rng_from_seed(5);
        assert_eq!(f.induced_outcome(&[9.0], &mut rng), InducedOutcome::Empty);
        let mut level1 = 0usize;
        let n = 10_000;
        for _ in 0..n {
            match f.induced_outcome(&[2.5], &mut rng) {
                InducedOutcome::Rect(k) if k.part(0) == (1, 0) => level1 += 1,
                InducedOutcome::Rect(k) => assert_eq!(k.part(0), (2, 1)),
                InducedOutcome::Empty => panic!("inside point mapped to empty"),
            }
        }
        let freq = level1 as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn induced_distribution_of_point_mass() {
        let pts = PointSet::new((0..5).map(|i| vec![i as f64, (i * 3 % 5) as f64]).collect()).unwrap();
        let f = CoverFamily::build(&SamplePointGrid::build(&pts).unwrap());
        let d = DiscreteGridDistribution::from_weighted_points(&[(vec![1.5, 2.5], 1.0)]).unwrap();
        let induced = f.induced_distribution(&d).unwrap();
        assert_eq!(induced.len(), 4);
        assert!(induced.values().all(|&w| w == 0.25));
    }

    #[test]
    fn key_roundtrip_and_validation() {
        let k = FamilyKey::new(&[(3, 5), (1, 1), (26, 12345)]).unwrap();
        assert_eq!(k.parts(3), vec![(3, 5), (1, 1), (26, 12345)]);
        assert!(FamilyKey::new(&[(2, 4)]).is_err());
        assert!(FamilyKey::new(&[(0, 0)]).is_err());
    }
}
