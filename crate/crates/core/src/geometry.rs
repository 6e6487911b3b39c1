//! Axis-aligned boxes and the point-set searches built on them.

use serde::{Deserialize, Serialize};

use crate::{check_dim, Error, Result};

/// A closed box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRectangle {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisRectangle {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidArgument("rectangle dimension must be >= 1".into()));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite bound on axis {i}")));
            }
            if a > b {
                return Err(Error::InvalidArgument(format!(
                    "axis {i}: lo {a} exceeds hi {b}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `R_{x,y}`: the smallest closed box containing both points.
    pub fn from_points(x: &[f64], y: &[f64]) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        let lo = x.iter().zip(y).map(|(a, b)| a.min(*b)).collect();
        let hi = x.iter().zip(y).map(|(a, b)| a.max(*b)).collect();
        Self::new(lo, hi)
    }

    /// Smallest closed box containing every point.
    pub fn hull(points: &[Vec<f64>]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("hull of no points".into()))?;
        let (mut lo, mut hi) = (first.clone(), first.clone());
        for x in &points[1..] {
            check_dim(lo.len(), x.len())?;
            for (i, &v) in x.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Closed containment.
    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        Ok(self.contains_unchecked(z))
    }

    pub(crate) fn contains_unchecked(&self, z: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(z)
            .all(|((lo, hi), v)| lo <= v && v <= hi)
    }

    /// True when `other` lies inside `self`.
    pub fn contains_rect(&self, other: &AxisRectangle) -> Result<bool> {
        check_dim(self.dim(), other.dim())?;
        Ok((0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i]))
    }

    /// Lebesgue volume.
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// True when the open interiors intersect.
    pub fn interiors_overlap(&self, other: &AxisRectangle) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    /// Carve `self \ inner` into at most `2d` interior-disjoint boxes.
    ///
    /// Axis 0 is handled first: the slabs below and above `inner` on that
    /// axis span the full extent of `self` on the remaining axes. The middle
    /// slab is then restricted to `inner` on axis 0 and the construction
    /// recurses on axes 1..d. Zero-width slabs are dropped.
    pub fn decompose_complement(&self, inner: &AxisRectangle) -> Result<Vec<AxisRectangle>> {
        if !self.contains_rect(inner)? {
            return Err(Error::InvalidArgument(
                "inner rectangle is not contained in the outer rectangle".into(),
            ));
        }
        let d = self.dim();
        let mut out = Vec::with_capacity(2 * d);
        // `frame` holds inner's extent on the axes already carved and self's
        // extent on the rest.
        let mut frame_lo = self.lo.clone();
        let mut frame_hi = self.hi.clone();
        for axis in 0..d {
            if self.lo[axis] < inner.lo[axis] {
                let mut hi = frame_hi.clone();
                hi[axis] = inner.lo[axis];
                out.push(AxisRectangle { lo: frame_lo.clone(), hi });
            }
            if inner.hi[axis] < self.hi[axis] {
                let mut lo = frame_lo.clone();
                lo[axis] = inner.hi[axis];
                out.push(AxisRectangle { lo, hi: frame_hi.clone() });
            }
            frame_lo[axis] = inner.lo[axis];
            frame_hi[axis] = inner.hi[axis];
        }
        Ok(out)
    }
}

/// A finite list of points in `R^d`, with a flag recording whether every
/// axis has pairwise distinct coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    dim: usize,
    generic: bool,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        for p in &points {
            check_dim(dim, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coordinate".into()));
            }
        }
        let generic = first_tie(&points, dim).is_none();
        Ok(Self { points, dim, generic })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_generic(&self) -> bool {
        self.generic
    }

    /// Error naming the first repeated coordinate, if any.
    pub fn require_generic(&self) -> Result<()> {
        match first_tie(&self.points, self.dim) {
            Some((axis, value)) => Err(Error::NotGeneric { axis, value }),
            None => Ok(()),
        }
    }
}

fn first_tie(points: &[Vec<f64>], dim: usize) -> Option<(usize, f64)> {
    for axis in 0..dim {
        let mut col: Vec<f64> = points.iter().map(|p| p[axis]).collect();
        col.sort_by(f64::total_cmp);
        if let Some(w) = col.windows(2).find(|w| w[0] == w[1]) {
            return Some((axis, w[0]));
        }
    }
    None
}

/// Three points of a set with `z` inside the box spanned by `x` and `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominatingTriple {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Exhaustive search for `x, y, z` in `set` with `z` in `R_{x,y}`, `z != x, y`.
///
/// Pairs are scanned as `(i, j)` with `i < j`, then `z` in index order; the
/// first hit is returned. Such a triple always exists once
/// `|set| >= 2^(2^(d-1)) + 1`.
pub fn find_dominating_triple(set: &PointSet) -> Result<Option<DominatingTriple>> {
    set.require_generic()?;
    let pts = set.points();
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for z in 0..n {
                if z == i || z == j {
                    continue;
                }
                let inside = (0..set.dim()).all(|a| {
                    let (lo, hi) = if pts[i][a] < pts[j][a] {
                        (pts[i][a], pts[j][a])
                    } else {
                        (pts[j][a], pts[i][a])
                    };
                    lo <= pts[z][a] && pts[z][a] <= hi
                });
                if inside {
                    return Ok(Some(DominatingTriple {
                        x: pts[i].clone(),
                        y: pts[j].clone(),
                        z: pts[z].clone(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// `(n - 1)^(2^d) + 1`: every sequence of that many points in `R^d` has a
/// length-`n` subsequence monotone in each coordinate.
pub fn erdos_szekeres_threshold(n: u64, d: u32) -> Result<u64> {
    if n < 2 || d < 1 {
        return Err(Error::InvalidArgument(format!(
            "threshold needs n >= 2 and d >= 1, got n={n}, d={d}"
        )));
    }
    let overflow = || Error::Overflow(format!("(n-1)^(2^d) + 1 with n={n}, d={d}"));
    let exponent = 2u32.checked_pow(d).ok_or_else(overflow)?;
    (n - 1)
        .checked_pow(exponent)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(overflow)
}
