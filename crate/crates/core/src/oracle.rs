//! Exact computations on small discrete instances: the `A_k` distance by
//! branch and bound (any dimension) and by dynamic programming (one
//! dimension), the expected discrepancy of the box spanned by two random
//! points, and related one-set quantities.
//!
//! Two boxes of a family are compatible when they share no support point
//! and their interiors are disjoint. Any valid family can be shrunk to the
//! hulls of the support points it covers without changing masses, so the
//! search runs over those hulls only.

use crate::distributions::DiscreteGridDistribution;
use crate::geometry::AxisRectangle;
use crate::{check_dim, Error, Result};

/// Most distinct support coordinates per axis accepted by the brute force.
pub const MAX_COORDS_PER_AXIS: usize = 12;
/// Largest `k` accepted by the brute force.
pub const MAX_K: usize = 4;

/// A witnessing family of boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleFamily {
    pub rects: Vec<AxisRectangle>,
    /// Pairwise interior-disjoint and support-disjoint, as checked.
    pub disjoint: bool,
}

/// Combined support of `p` and `q` with signed point discrepancies.
struct Signed {
    points: Vec<Vec<f64>>,
    delta: Vec<f64>,
}

impl Signed {
    fn new(p: &DiscreteGridDistribution, q: &DiscreteGridDistribution) -> Result<Self> {
        check_dim(p.dim(), q.dim())?;
        let mut all: Vec<(Vec<f64>, f64)> = p.support();
        all.extend(q.support().into_iter().map(|(x, w)| (x, -w)));
        all.sort_by(|a, b| cmp_points(&a.0, &b.0));
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut delta: Vec<f64> = Vec::new();
        let mut pos: Vec<f64> = Vec::new();
        let mut neg: Vec<f64> = Vec::new();
        for (x, w) in all {
            if points.last() != Some(&x) {
                points.push(x);
                pos.push(0.0);
                neg.push(0.0);
            }
            let last = points.len() - 1;
            if w > 0.0 { pos[last] += w } else { neg[last] -= w }
        }
        delta.extend(pos.iter().zip(&neg).map(|(a, b)| a - b));
        Ok(Self { points, delta })
    }

    fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    fn box_delta(&self, rect: &AxisRectangle) -> f64 {
        self.points
            .iter()
            .zip(&self.delta)
            .filter(|(x, _)| rect.contains_unchecked(x))
            .map(|(_, d)| d)
            .sum()
    }
}

fn cmp_points(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

#[derive(Debug, Clone)]
struct Candidate {
    members: Vec<u64>,
    hull: AxisRectangle,
    delta: f64,
}

impl Candidate {
    fn compatible(&self, other: &Candidate) -> bool {
        self.members.iter().zip(&other.members).all(|(a, b)| a & b == 0)
            && !self.hull.interiors_overlap(&other.hull)
    }
}

/// Exact `A_k` distance by branch and bound over support hulls.
///
/// Requires at most [`MAX_COORDS_PER_AXIS`] distinct support coordinates per
/// axis and `1 <= k <= MAX_K`. Returns the value and one witnessing family.
pub fn ak_distance_bruteforce(
    p: &DiscreteGridDistribution,
    q: &DiscreteGridDistribution,
    k: usize,
) -> Result<(f64, RectangleFamily)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > MAX_K {
        return Err(Error::CapExceeded(format!("k = {k} exceeds the brute-force cap {MAX_K}")));
    }
    let signed = Signed::new(p, q)?;
    let empty = RectangleFamily { rects: Vec::new(), disjoint: true };
    if signed.points.is_empty() {
        return Ok((0.0, empty));
    }
    let dim = signed.dim();
    let coords: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let mut c: Vec<f64> = signed.points.iter().map(|x| x[a]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    if let Some((a, c)) = coords.iter().enumerate().find(|(_, c)| c.len() > MAX_COORDS_PER_AXIS) {
        return Err(Error::CapExceeded(format!(
            "axis {a} has {} support coordinates, cap is {MAX_COORDS_PER_AXIS}",
            c.len()
        )));
    }

    let mut cands = enumerate_hulls(&signed, &coords);
    cands.retain(|c| c.delta != 0.0);
    cands.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()));

    let mut search = Search { cands: &cands, k, best: 0.0, best_set: Vec::new(), stack: Vec::new() };
    search.dfs(0, 0.0);
    let rects: Vec<AxisRectangle> =
        search.best_set.iter().map(|&i| cands[i].hull.clone()).collect();
    let disjoint = search
        .best_set
        .iter()
        .enumerate()
        .all(|(a, &i)| search.best_set[a + 1..].iter().all(|&j| cands[i].compatible(&cands[j])));
    Ok((search.best, RectangleFamily { rects, disjoint }))
}

/// Every distinct nonempty support subset cut out by a box with corners on
/// support coordinates, represented by its hull.
fn enumerate_hulls(signed: &Signed, coords: &[Vec<f64>]) -> Vec<Candidate> {
    let dim = coords.len();
    let n = signed.points.len();
    let intervals: Vec<Vec<(f64, f64)>> = coords
        .iter()
        .map(|c| {
            (0..c.len()).flat_map(|i| (i..c.len()).map(move |j| (c[i], c[j]))).collect()
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut choice = vec![0usize; dim];
    loop {
        let lo: Vec<f64> = (0..dim).map(|a| intervals[a][choice[a]].0).collect();
        let hi: Vec<f64> = (0..dim).map(|a| intervals[a][choice[a]].1).collect();
        let rect = AxisRectangle::new(lo, hi).expect("ordered endpoints");
        let mut members = vec![0u64; words(n)];
        let mut inside = Vec::new();
        for (i, x) in signed.points.iter().enumerate() {
            if rect.contains_unchecked(x) {
                members[i / 64] |= 1 << (i % 64);
                inside.push(x.clone());
            }
        }
        if !inside.is_empty() && seen.insert(members.clone()) {
            let hull = AxisRectangle::hull(&inside).expect("nonempty");
            let delta = signed.box_delta(&hull);
            out.push(Candidate { members, hull, delta });
        }
        let mut a = 0;
        loop {
            if a == dim {
                return out;
            }
            choice[a] += 1;
            if choice[a] < intervals[a].len() {
                break;
            }
            choice[a] = 0;
            a += 1;
        }
    }
}

struct Search<'a> {
    cands: &'a [Candidate],
    k: usize,
    best: f64,
    best_set: Vec<usize>,
    stack: Vec<usize>,
}

impl Search<'_> {
    fn dfs(&mut self, start: usize, value: f64) {
        if value > self.best {
            self.best = value;
            self.best_set = self.stack.clone();
        }
        let left = self.k - self.stack.len();
        if left == 0 {
            return;
        }
        for i in start..self.cands.len() {
            let c = &self.cands[i];
            // Candidates are sorted by |delta|, so nothing later can do better.
            if value + left as f64 * c.delta.abs() <= self.best {
                break;
            }
            if self.stack.iter().all(|&j| self.cands[j].compatible(c)) {
                self.stack.push(i);
                self.dfs(i + 1, value + c.delta.abs());
                self.stack.pop();
            }
        }
    }
}

/// Exact one-dimensional `A_k` distance: the best split of the sorted
/// support into at most `k` runs, in `O(n^2 k)`.
pub fn ak_distance_1d(
    p: &DiscreteGridDistribution,
    q: &DiscreteGridDistribution,
    k: usize,
) -> Result<f64> {
    if p.dim() != 1 || q.dim() != 1 {
        return Err(Error::InvalidArgument("ak_distance_1d needs one-dimensional inputs".into()));
    }
    let signed = Signed::new(p, q)?;
    let n = signed.delta.len();
    let mut prefix = vec![0.0; n + 1];
    for (j, d) in signed.delta.iter().enumerate() {
        prefix[j + 1] = prefix[j] + d;
    }
    // f[j] = best value on the first j points with the current number of runs.
    let mut f = vec![0.0f64; n + 1];
    for _ in 0..k {
        let prev = f.clone();
        for j in 1..=n {
            let mut best = f[j - 1];
            for i in 0..j {
                best = best.max(prev[i] + (prefix[j] - prefix[i]).abs());
            }
            f[j] = best;
        }
    }
    Ok(f[n])
}

fn restricted_support(
    dist: &DiscreteGridDistribution,
    rect: &AxisRectangle,
) -> Vec<(Vec<f64>, f64)> {
    dist.support().into_iter().filter(|(x, _)| rect.contains_unchecked(x)).collect()
}

/// `E |p(R_{x,y}) - q(R_{x,y})|` for `x, y` drawn independently from
/// `(p + q) / 2` restricted to `rect` and renormalized, where `R_{x,y}` is
/// the box spanned by the two points. Exact enumeration over pairs.
pub fn random_pair_discrepancy(
    p: &DiscreteGridDistribution,
    q: &DiscreteGridDistribution,
    rect: &AxisRectangle,
) -> Result<f64> {
    check_dim(p.dim(), rect.dim())?;
    let signed = Signed::new(p, q)?;
    let mix = p.mixture_half(q)?;
    let w = restricted_support(&mix, rect);
    let total: f64 = w.iter().map(|(_, m)| m).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("rectangle carries no mass".into()));
    }
    let mut e = 0.0;
    for (x, wx) in &w {
        for (y, wy) in &w {
            let r = AxisRectangle::from_points(x, y)?;
            e += (wx / total) * (wy / total) * signed.box_delta(&r).abs();
        }
    }
    Ok(e)
}

/// `E_{x,y ~ D} [D(R_{x,y})]`, exact over pairs of support points.
pub fn pair_box_mass_expectation(dist: &DiscreteGridDistribution) -> Result<f64> {
    let support = dist.support();
    let total: f64 = support.iter().map(|(_, m)| m).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("distribution has zero mass".into()));
    }
    let mut e = 0.0;
    for (x, wx) in &support {
        for (y, wy) in &support {
            let r = AxisRectangle::from_points(x, y)?;
            e += (wx / total) * (wy / total) * dist.mass_of(&r)? / total;
        }
    }
    Ok(e)
}

/// `rho(S) = 2 |p(S) - q(S)| / (p(S) + q(S))`.
pub fn discrepancy_density(
    p: &DiscreteGridDistribution,
    q: &DiscreteGridDistribution,
    set: &AxisRectangle,
) -> Result<f64> {
    density_from_masses(p.mass_of(set)?, q.mass_of(set)?)
}

pub fn density_from_masses(ps: f64, qs: f64) -> Result<f64> {
    if !(ps + qs > 0.0) {
        return Err(Error::InvalidArgument("set carries no mass under p or q".into()));
    }
    Ok(2.0 * (ps - qs).abs() / (ps + qs))
}

/// `beta_d = (2^(2^(d-1)) + 1)^(-3)` for `1 <= d <= 3`.
pub fn constant_mass_bound(d: usize) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("d must be in 1..=3, got {d}")));
    }
    let base = (1u64 << (1u32 << (d - 1))) + 1;
    Ok((base as f64).powi(-3))
}
