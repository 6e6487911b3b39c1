//! Lower-bound constructions: square-edge gadgets, order tuples, the
//! heavy/light diagonal instances, and the random monotone maps used to hide
//! coordinate values.
//!
//! A gadget lives on the diamond with vertices `center +- r e1` and
//! `center +- r e2`. Variant `T` is uniform on the upper-left and lower-right
//! edges, variant `R` on the upper-right and lower-left edges, and `Mix` is
//! their average.

use std::collections::{BTreeMap, HashMap};

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteGridDistribution, LabeledSample, Source};
use crate::geometry::AxisRectangle;
use crate::{Error, Result};

/// Distance from the support beyond which a point counts as off the diamond.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    T,
    R,
    Mix,
}

/// The four diamond edges, from one vertex to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// Left vertex to top vertex.
    UpperLeft,
    /// Top vertex to right vertex.
    UpperRight,
    /// Right vertex to bottom vertex.
    LowerRight,
    /// Bottom vertex to left vertex.
    LowerLeft,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::UpperLeft, Edge::UpperRight, Edge::LowerRight, Edge::LowerLeft];
}

impl Variant {
    /// Mass each edge receives under this variant.
    pub fn edge_weight(self, edge: Edge) -> f64 {
        match (self, edge) {
            (Variant::Mix, _) => 0.25,
            (Variant::T, Edge::UpperLeft | Edge::LowerRight) => 0.5,
            (Variant::R, Edge::UpperRight | Edge::LowerLeft) => 0.5,
            _ => 0.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Variant::T => Variant::R,
            Variant::R => Variant::T,
            Variant::Mix => Variant::Mix,
        }
    }
}

/// Open quadrants around a point `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    /// `x > a_x, y > a_y`.
    One,
    /// `x < a_x, y < a_y`.
    Two,
    /// `x > a_x, y < a_y`.
    Three,
    /// `x < a_x, y > a_y`.
    Four,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::One, Quadrant::Two, Quadrant::Three, Quadrant::Four];

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Quadrant::One),
            2 => Ok(Quadrant::Two),
            3 => Ok(Quadrant::Three),
            4 => Ok(Quadrant::Four),
            _ => Err(Error::InvalidArgument(format!("quadrant must be 1..=4, got {i}"))),
        }
    }

    /// Signs `(sx, sy)`: `+1` means greater than the corner.
    fn signs(self) -> (f64, f64) {
        match self {
            Quadrant::One => (1.0, 1.0),
            Quadrant::Two => (-1.0, -1.0),
            Quadrant::Three => (1.0, -1.0),
            Quadrant::Four => (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareEdgeGadget {
    pub center: [f64; 2],
    pub radius: f64,
    pub variant: Variant,
}

impl SquareEdgeGadget {
    pub fn new(center: [f64; 2], radius: f64, variant: Variant) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("gadget needs a finite center and radius > 0".into()));
        }
        Ok(Self { center, radius, variant })
    }

    fn vertex(&self, which: usize) -> [f64; 2] {
        let [cx, cy] = self.center;
        let r = self.radius;
        match which {
            0 => [cx - r, cy], // left
            1 => [cx, cy + r], // top
            2 => [cx + r, cy], // right
            _ => [cx, cy - r], // bottom
        }
    }

    /// Start and end vertices of an edge.
    pub fn edge_endpoints(&self, edge: Edge) -> ([f64; 2], [f64; 2]) {
        let i = match edge {
            Edge::UpperLeft => 0,
            Edge::UpperRight => 1,
            Edge::LowerRight => 2,
            Edge::LowerLeft => 3,
        };
        (self.vertex(i), self.vertex((i + 1) % 4))
    }

    fn point_on(&self, edge: Edge, t: f64) -> [f64; 2] {
        let (a, b) = self.edge_endpoints(edge);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Arc-length uniform point on the variant's edges.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let edge = self.sample_edge(rng);
        self.point_on(edge, rng.random::<f64>())
    }

    fn sample_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Edge {
        let pair = match self.variant {
            Variant::T => [Edge::UpperLeft, Edge::LowerRight],
            Variant::R => [Edge::UpperRight, Edge::LowerLeft],
            Variant::Mix => return Edge::ALL[rng.random_range(0..4)],
        };
        pair[usize::from(rng.random_bool(0.5))]
    }

    /// Which edge a sampled point lies on (vertices resolve to the first
    /// matching edge).
    pub fn edge_of(&self, z: [f64; 2]) -> Option<Edge> {
        let dx = z[0] - self.center[0];
        let dy = z[1] - self.center[1];
        if (dx.abs() + dy.abs() - self.radius).abs() > SUPPORT_TOL {
            return None;
        }
        Some(match (dx <= 0.0, dy >= 0.0) {
            (true, true) => Edge::UpperLeft,
            (false, true) => Edge::UpperRight,
            (false, false) => Edge::LowerRight,
            (true, false) => Edge::LowerLeft,
        })
    }

    /// Exact mass of an open quadrant around an on-support point `a`.
    pub fn quadrant_mass(&self, a: [f64; 2], quadrant: Quadrant) -> Result<f64> {
        let off = ((a[0] - self.center[0]).abs() + (a[1] - self.center[1]).abs() - self.radius).abs();
        if off > SUPPORT_TOL {
            return Err(Error::InvalidArgument(format!(
                "point ({}, {}) is {off:e} away from the gadget support",
                a[0], a[1]
            )));
        }
        let (sx, sy) = quadrant.signs();
        let mut total = 0.0;
        for edge in Edge::ALL {
            let w = self.variant.edge_weight(edge);
            if w == 0.0 {
                continue;
            }
            let (p0, p1) = self.edge_endpoints(edge);
            let tx = half_line(sx * p0[0], sx * (p1[0] - p0[0]), sx * a[0]);
            let ty = half_line(sy * p0[1], sy * (p1[1] - p0[1]), sy * a[1]);
            let lo = tx.0.max(ty.0);
            let hi = tx.1.min(ty.1);
            if hi > lo {
                total += w * (hi - lo);
            }
        }
        Ok(total)
    }

    /// Exact mass of the open box `rect` (interior).
    pub fn open_box_mass(&self, rect: &AxisRectangle) -> f64 {
        Edge::ALL
            .iter()
            .map(|&edge| {
                let w = self.variant.edge_weight(edge);
                if w == 0.0 {
                    return 0.0;
                }
                let (p0, p1) = self.edge_endpoints(edge);
                let mut lo: f64 = 0.0;
                let mut hi: f64 = 1.0;
                for axis in 0..2 {
                    let above = half_line(p0[axis], p1[axis] - p0[axis], rect.lo()[axis]);
                    let below = half_line(-p0[axis], p0[axis] - p1[axis], -rect.hi()[axis]);
                    lo = lo.max(above.0).max(below.0);
                    hi = hi.min(above.1).min(below.1);
                }
                if hi > lo { w * (hi - lo) } else { 0.0 }
            })
            .sum()
    }
}

/// Parameter range `[lo, hi] ⊆ [0, 1]` where `start + t * slope > bound`.
fn half_line(start: f64, slope: f64, bound: f64) -> (f64, f64) {
    if slope == 0.0 {
        return if start > bound { (0.0, 1.0) } else { (1.0, 0.0) };
    }
    let t = (bound - start) / slope;
    if slope > 0.0 { (t.max(0.0), 1.0) } else { (0.0, t.min(1.0)) }
}

/// Per-axis ranks and labels of a labeled sample set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderTuple {
    /// `sigma_x[i]` is the rank (from 1) of sample `i` along x.
    pub sigma_x: Vec<usize>,
    pub sigma_y: Vec<usize>,
    pub labels: Vec<Source>,
}

fn ranks(values: &[f64], axis: usize) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    if let Some(w) = order.windows(2).find(|w| values[w[0]] == values[w[1]]) {
        return Err(Error::NotGeneric { axis, value: values[w[0]] });
    }
    let mut r = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        r[i] = rank + 1;
    }
    Ok(r)
}

/// Order tuple of planar samples. Tied coordinates are an error.
pub fn order_tuple(samples: &[LabeledSample]) -> Result<OrderTuple> {
    for s in samples {
        crate::check_dim(2, s.point.len())?;
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.point[0]).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.point[1]).collect();
    Ok(OrderTuple {
        sigma_x: ranks(&xs, 0)?,
        sigma_y: ranks(&ys, 1)?,
        labels: samples.iter().map(|s| s.label).collect(),
    })
}

impl OrderTuple {
    /// Relabel samples in x order: the result has `sigma_x` equal to the
    /// identity. Two tuples that differ only by the order in which the samples
    /// were listed map to the same canonical tuple.
    pub fn canonical(&self) -> OrderTuple {
        let m = self.sigma_x.len();
        let mut by_x = vec![0; m];
        for (i, &r) in self.sigma_x.iter().enumerate() {
            by_x[r - 1] = i;
        }
        OrderTuple {
            sigma_x: (1..=m).collect(),
            sigma_y: by_x.iter().map(|&i| self.sigma_y[i]).collect(),
            labels: by_x.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Result of comparing the order-tuple distributions of two sampling schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    /// Plug-in total variation between the two empirical histograms.
    pub raw: f64,
    /// `raw` minus the mean plug-in value of resampled equal-distribution
    /// histograms with the same counts.
    pub corrected: f64,
    /// Standard deviation of the plug-in value under those resamples.
    pub stderr: f64,
    pub cells: usize,
}

/// Estimate the total variation between the order-tuple distributions of
/// `m` labeled samples from one gadget in two cases:
///
/// * equal: both sources are `Mix`;
/// * far: with a fair coin the sources are `(T, R)` or `(R, T)`, fixed for
///   the whole tuple.
///
/// Each sample's label is a fair coin. Tuples are canonicalized by x order,
/// which leaves the distance unchanged since samples are exchangeable.
pub fn order_tuple_distribution_distance<R: Rng + ?Sized>(
    m: usize,
    trials: usize,
    bootstrap: usize,
    rng: &mut R,
) -> Result<TvEstimate> {
    if m == 0 || trials == 0 {
        return Err(Error::InvalidArgument("need m >= 1 and trials >= 1".into()));
    }
    let gadget = |v| SquareEdgeGadget::new([0.0, 0.0], 1.0, v).expect("valid gadget");
    let (mix, t, r) = (gadget(Variant::Mix), gadget(Variant::T), gadget(Variant::R));
    let mut yes: HashMap<OrderTuple, u64> = HashMap::new();
    let mut no: HashMap<OrderTuple, u64> = HashMap::new();
    let draw = |sources: (&SquareEdgeGadget, &SquareEdgeGadget), rng: &mut R| {
        let samples: Vec<LabeledSample> = (0..m)
            .map(|_| {
                let label = if rng.random_bool(0.5) { Source::P } else { Source::Q };
                let g = if label == Source::P { sources.0 } else { sources.1 };
                LabeledSample { point: g.sample(rng).to_vec(), label }
            })
            .collect();
        order_tuple(&samples).map(|o| o.canonical())
    };
    for _ in 0..trials {
        *yes.entry(draw((&mix, &mix), rng)?).or_default() += 1;
        let pair = if rng.random_bool(0.5) { (&t, &r) } else { (&r, &t) };
        *no.entry(draw(pair, rng)?).or_default() += 1;
    }
    let keys: Vec<&OrderTuple> = yes.keys().chain(no.keys()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let a: Vec<u64> = keys.iter().map(|k| yes.get(*k).copied().unwrap_or(0)).collect();
    let b: Vec<u64> = keys.iter().map(|k| no.get(*k).copied().unwrap_or(0)).collect();
    let n = trials as u64;
    let raw = plug_in_tv(&a, &b, n);

    let pooled: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) as f64 / (2 * n) as f64).collect();
    let mut null = Vec::with_capacity(bootstrap);
    for _ in 0..bootstrap {
        let ra = multinomial(n, &pooled, rng)?;
        let rb = multinomial(n, &pooled, rng)?;
        null.push(plug_in_tv(&ra, &rb, n));
    }
    let (mean, sd) = mean_sd(&null);
    Ok(TvEstimate { raw, corrected: raw - mean, stderr: sd, cells: keys.len() })
}

fn plug_in_tv(a: &[u64], b: &[u64], n: u64) -> f64 {
    0.5 * a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum::<f64>() / n as f64
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Multinomial counts by sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut left = n;
    let mut rest = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for &p in probs {
        if left == 0 || rest <= 0.0 {
            out.push(0);
            continue;
        }
        let share = (p / rest).clamp(0.0, 1.0);
        let c = Binomial::new(left, share)
            .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
            .sample(rng);
        out.push(c);
        left -= c;
        rest -= p;
    }
    Ok(out)
}

/// One diagonal square of a hard instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareAssignment {
    pub heavy: bool,
    /// Variant used by `p`; `q` uses the opposite one.
    pub p_variant: Variant,
}

/// A weighted sum of gadgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GadgetMeasure {
    pub components: Vec<(SquareEdgeGadget, f64)>,
}

impl GadgetMeasure {
    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|(_, w)| w).sum()
    }

    /// Draw from the normalized measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let total = self.total_mass();
        let mut u = rng.random::<f64>() * total;
        for (g, w) in &self.components {
            if u < *w {
                return g.sample(rng);
            }
            u -= w;
        }
        self.components.last().expect("nonempty measure").0.sample(rng)
    }

    /// Exact mass of an open box.
    pub fn open_box_mass(&self, rect: &AxisRectangle) -> f64 {
        self.components.iter().map(|(g, w)| w * g.open_box_mass(rect)).sum()
    }

    /// Snap mass to a grid of `resolution` cells per unit: every cell's exact
    /// share of each segment goes to the cell's top-left vertex.
    pub fn discretize(&self, resolution: usize) -> Result<DiscreteGridDistribution> {
        if resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be >= 1".into()));
        }
        let h = 1.0 / resolution as f64;
        let mut acc: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for (g, w) in &self.components {
            for edge in Edge::ALL {
                let ew = w * g.variant.edge_weight(edge);
                if ew == 0.0 {
                    continue;
                }
                let (p0, p1) = g.edge_endpoints(edge);
                let mut cuts = vec![0.0, 1.0];
                for axis in 0..2 {
                    let (a, b) = (p0[axis], p1[axis]);
                    if a == b {
                        continue;
                    }
                    let (lo, hi) = (a.min(b), a.max(b));
                    let mut j = (lo / h).ceil() as i64;
                    while (j as f64) * h < hi {
                        cuts.push(((j as f64) * h - a) / (b - a));
                        j += 1;
                    }
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                for s in cuts.windows(2) {
                    let len = s[1] - s[0];
                    if len <= 0.0 {
                        continue;
                    }
                    let mid = g.point_on(edge, 0.5 * (s[0] + s[1]));
                    let cx = (mid[0] / h).floor() as i64;
                    let cy = (mid[1] / h).floor() as i64;
                    *acc.entry((cx, cy + 1)).or_insert(0.0) += ew * len;
                }
            }
        }
        let points: Vec<(Vec<f64>, f64)> = acc
            .into_iter()
            .map(|((i, j), m)| (vec![i as f64 * h, j as f64 * h], m))
            .collect();
        DiscreteGridDistribution::from_weighted_points(&points)
    }
}

/// A heavy/light diagonal instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstance {
    pub k: usize,
    pub m: usize,
    pub eps: f64,
    /// Number of diagonal squares.
    pub r: usize,
    /// `p = q` exactly when set.
    pub equal_case: bool,
    pub squares: Vec<SquareAssignment>,
    pub p: GadgetMeasure,
    pub q: GadgetMeasure,
}

/// Squares per unit of `k`.
pub const SQUARES_PER_K: f64 = 1.0 / 8.0;

/// Generate an instance: `r = ceil(k/8)` unit squares on the diagonal, each
/// heavy with probability `m/k` (mass `1/m`, `Mix` on both sides) or light
/// (mass `eps/k`). Light squares are `Mix` on both sides in the equal case
/// and `T`/`R` in a random order in the far case.
pub fn gen_hard_instance<R: Rng + ?Sized>(
    k: usize,
    m: usize,
    eps: f64,
    equal_case: bool,
    rng: &mut R,
) -> Result<HardInstance> {
    if m == 0 || 2 * m >= k {
        return Err(Error::InvalidArgument(format!("need 1 <= m < k/2, got m = {m}, k = {k}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps must be in (0, 1], got {eps}")));
    }
    let r = (SQUARES_PER_K * k as f64).ceil() as usize;
    let heavy_p = m as f64 / k as f64;
    let mut squares = Vec::with_capacity(r);
    let mut p = Vec::with_capacity(r);
    let mut q = Vec::with_capacity(r);
    for i in 0..r {
        let heavy = rng.random_bool(heavy_p);
        let p_variant = if heavy || equal_case {
            Variant::Mix
        } else if rng.random_bool(0.5) {
            Variant::T
        } else {
            Variant::R
        };
        let mass = if heavy { 1.0 / m as f64 } else { eps / k as f64 };
        let c = i as f64 + 0.5;
        p.push((SquareEdgeGadget::new([c, c], 0.5, p_variant)?, mass));
        q.push((SquareEdgeGadget::new([c, c], 0.5, p_variant.opposite())?, mass));
        squares.push(SquareAssignment { heavy, p_variant });
    }
    Ok(HardInstance {
        k,
        m,
        eps,
        r,
        equal_case,
        squares,
        p: GadgetMeasure { components: p },
        q: GadgetMeasure { components: q },
    })
}

impl HardInstance {
    pub fn light_count(&self) -> usize {
        self.squares.iter().filter(|s| !s.heavy).count()
    }

    pub fn heavy_count(&self) -> usize {
        self.r - self.light_count()
    }

    /// `#heavy / m + #light * eps / k`.
    pub fn total_mass(&self) -> f64 {
        self.heavy_count() as f64 / self.m as f64 + self.light_count() as f64 * self.eps / self.k as f64
    }

    /// Boxes around each quadrant of the light squares (at most `k`), and
    /// their summed discrepancy between the normalized measures.
    pub fn ak_lower_bound(&self) -> (f64, Vec<AxisRectangle>) {
        let mut rects = Vec::new();
        for (i, s) in self.squares.iter().enumerate() {
            if s.heavy || rects.len() + 4 > self.k {
                continue;
            }
            let lo = i as f64;
            let mid = lo + 0.5;
            let hi = lo + 1.0;
            for (x0, x1, y0, y1) in [(lo, mid, mid, hi), (mid, hi, mid, hi), (mid, hi, lo, mid), (lo, mid, lo, mid)] {
                rects.push(AxisRectangle::new(vec![x0, y0], vec![x1, y1]).expect("ordered"));
            }
        }
        let (pm, qm) = (self.p.total_mass(), self.q.total_mass());
        let sum = rects
            .iter()
            .map(|r| (self.p.open_box_mass(r) / pm - self.q.open_box_mass(r) / qm).abs())
            .sum();
        (sum, rects)
    }
}

/// `f(x) = exp(x e^l1) e^l2 + l3`, a random strictly increasing map whose
/// parameters scale with `W`. `l3` is stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    pub lambda1: f64,
    pub lambda2: f64,
    pub ln_lambda3: f64,
    pub w: f64,
}

impl MonotoneMap {
    /// `l1 ~ U[ln ln W, 2 ln ln W]`, `l2 ~ U[0, ln^3 W]`,
    /// `l3 ~ U[0, exp(2 ln^3 W)]`.
    pub fn sample<R: Rng + ?Sized>(w: f64, rng: &mut R) -> Result<Self> {
        if !(w > std::f64::consts::E.powf(std::f64::consts::E)) || !w.is_finite() {
            return Err(Error::InvalidArgument(format!("W must exceed e^e, got {w}")));
        }
        let ll = w.ln().ln();
        let l3 = w.ln().powi(3);
        let u: f64 = 1.0 - rng.random::<f64>();
        Ok(Self {
            lambda1: rng.random_range(ll..=2.0 * ll),
            lambda2: rng.random_range(0.0..=l3),
            ln_lambda3: 2.0 * l3 + u.ln(),
            w,
        })
    }

    /// `ln(f(x) - l3) = x e^l1 + l2`, the strictly increasing part of `f`.
    /// For large `W` the offset `l3` absorbs this term in `f64`, so `f`
    /// itself is only non-decreasing at double precision.
    pub fn ln_excess(&self, x: f64) -> f64 {
        x * self.lambda1.exp() + self.lambda2
    }

    /// `ln f(x)`, stable for every parameter size.
    pub fn apply_log(&self, x: f64) -> f64 {
        let a = self.ln_excess(x);
        let b = self.ln_lambda3;
        let hi = a.max(b);
        hi + ((a - hi).exp() + (b - hi).exp()).ln()
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        let v = self.apply_log(x).exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!(
                "f({x}) = exp({:.6e}) exceeds the f64 range",
                self.apply_log(x)
            )));
        }
        Ok(v)
    }

    /// Coordinates `(ln ln A, ln B, C / exp(2 ln^3 W))` of
    /// `(f(a), f(b), f(c))` with `A = (f(c)-f(a)) / (f(b)-f(a))`,
    /// `B = f(b) - f(a)`, `C = f(a)`, for `a < b < c`.
    pub fn triple_features(&self, a: f64, b: f64, c: f64) -> Result<[f64; 3]> {
        if !(a < b && b < c) {
            return Err(Error::InvalidArgument("triple must be strictly increasing".into()));
        }
        let s = self.lambda1.exp();
        let gap_ln = |d: f64| s * d + (-(-s * d).exp()).ln_1p();
        let ln_a = gap_ln(c - a) - gap_ln(b - a);
        let ln_b = self.lambda2 + s * a + gap_ln(b - a);
        let scale = 2.0 * self.w.ln().powi(3);
        let c_scaled = (self.ln_lambda3 - scale).exp() + (s * a + self.lambda2 - scale).exp();
        Ok([ln_a.ln(), ln_b, c_scaled])
    }
}

/// Histogram TV between the feature distributions of two triples under
/// random maps from `M(W)`, with `bins` cells per feature axis.
pub fn triple_obfuscation_tv<R: Rng + ?Sized>(
    w: f64,
    first: [f64; 3],
    second: [f64; 3],
    samples: usize,
    bins: [usize; 3],
    rng: &mut R,
) -> Result<f64> {
    let mut feats = [Vec::with_capacity(samples), Vec::with_capacity(samples)];
    for _ in 0..samples {
        for (side, t) in [first, second].iter().enumerate() {
            let f = MonotoneMap::sample(w, rng)?;
            feats[side].push(f.triple_features(t[0], t[1], t[2])?);
        }
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in feats.iter().flatten() {
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    let cell = |v: &[f64; 3]| -> usize {
        let mut idx = 0;
        for a in 0..3 {
            let span = (hi[a] - lo[a]).max(f64::MIN_POSITIVE);
            let j = (((v[a] - lo[a]) / span) * bins[a] as f64).floor() as usize;
            idx = idx * bins[a] + j.min(bins[a] - 1);
        }
        idx
    };
    let total: usize = bins.iter().product();
    let mut counts = [vec![0u64; total], vec![0u64; total]];
    for side in 0..2 {
        for v in &feats[side] {
            counts[side][cell(v)] += 1;
        }
    }
    Ok(plug_in_tv(&counts[0], &counts[1], samples as u64))
}
