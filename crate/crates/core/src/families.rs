//! Continuous box histograms and the instance families used by experiments.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::geometry::AxisRectangle;
use crate::{Error, Result};

/// A density that is constant on each cell of a product partition of a box.
///
/// `cuts[a]` are the strictly increasing breakpoints of axis `a`; cells are
/// listed with axis 0 varying fastest.
#[derive(Debug, Clone)]
pub struct BoxHistogram {
    cuts: Vec<Vec<f64>>,
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl BoxHistogram {
    pub fn new(cuts: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::InvalidArgument("histogram needs at least one axis".into()));
        }
        for (a, c) in cuts.iter().enumerate() {
            if c.len() < 2 || c.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(format!("axis {a} cuts are not increasing")));
            }
        }
        let cells: usize = cuts.iter().map(|c| c.len() - 1).product();
        crate::check_dim(cells, weights.len())?;
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidArgument("histogram weights must be >= 0 with positive sum".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidArgument(format!("bad weights: {e}")))?;
        Ok(Self { cuts, weights, index })
    }

    pub fn dim(&self) -> usize {
        self.cuts.len()
    }

    pub fn cuts(&self) -> &[Vec<f64>] {
        &self.cuts
    }

    /// Normalized cell masses.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn cell_index(&self, mut flat: usize) -> Vec<usize> {
        self.cuts
            .iter()
            .map(|c| {
                let n = c.len() - 1;
                let j = flat % n;
                flat /= n;
                j
            })
            .collect()
    }

    pub fn cell_rect(&self, flat: usize) -> AxisRectangle {
        let idx = self.cell_index(flat);
        let lo = idx.iter().zip(&self.cuts).map(|(&j, c)| c[j]).collect();
        let hi = idx.iter().zip(&self.cuts).map(|(&j, c)| c[j + 1]).collect();
        AxisRectangle::new(lo, hi).expect("cuts are increasing")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let idx = self.cell_index(self.index.sample(rng));
        idx.iter()
            .zip(&self.cuts)
            .map(|(&j, c)| rng.random_range(c[j]..c[j + 1]))
            .collect()
    }

    /// Sample access for the tester.
    pub fn access(&self) -> impl FnMut(&mut dyn RngCore) -> Option<Vec<f64>> + '_ {
        move |r: &mut dyn RngCore| Some(self.sample(r))
    }

    /// `sum |p_i - q_i|` over cells, which equals the `A_k` distance when
    /// both share this partition into `k` cells.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.cuts != other.cuts {
            return Err(Error::InvalidArgument("histograms use different partitions".into()));
        }
        Ok(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum())
    }
}

/// Near-square grid shape with `k` cells in `d` dimensions, `k` a power of two.
pub fn grid_shape(k: usize, d: usize) -> Result<Vec<usize>> {
    if !k.is_power_of_two() || k < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!("k = {k} must be a power of two >= 2")));
    }
    let bits = k.trailing_zeros() as usize;
    Ok((0..d).map(|a| 1usize << (bits / d + usize::from(a < bits % d))).collect())
}

fn even_cuts(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// How the planted discrepancy signs are laid out over the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPattern {
    Checkerboard,
    /// A uniformly random arrangement of `k/2` plus and `k/2` minus signs.
    Balanced,
}

/// Two histograms on the regular `k`-cell grid of `[0,1]^d` with masses
/// `(1 + delta s_i) / k` and `(1 - delta s_i) / k`, `s_i = +-1`. Their
/// `A_k` distance is `2 delta`.
pub fn planted_pair<R: Rng + ?Sized>(
    k: usize,
    d: usize,
    delta: f64,
    pattern: SignPattern,
    rng: &mut R,
) -> Result<(BoxHistogram, BoxHistogram)> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must be in [0, 1], got {delta}")));
    }
    let shape = grid_shape(k, d)?;
    let cuts: Vec<Vec<f64>> = shape.iter().map(|&n| even_cuts(n)).collect();
    let signs: Vec<f64> = match pattern {
        SignPattern::Checkerboard => (0..k)
            .map(|flat| {
                let mut rem = flat;
                let parity: usize = shape
                    .iter()
                    .map(|&n| {
                        let j = rem % n;
                        rem /= n;
                        j
                    })
                    .sum();
                if parity % 2 == 0 { 1.0 } else { -1.0 }
            })
            .collect(),
        SignPattern::Balanced => {
            let mut s: Vec<f64> = (0..k).map(|i| if i < k / 2 { 1.0 } else { -1.0 }).collect();
            s.shuffle(rng);
            s
        }
    };
    let p = signs.iter().map(|s| (1.0 + delta * s) / k as f64).collect();
    let q = signs.iter().map(|s| (1.0 - delta * s) / k as f64).collect();
    Ok((BoxHistogram::new(cuts.clone(), p)?, BoxHistogram::new(cuts, q)?))
}

/// A random `k`-cell histogram on `[0,1]^d`: uniformly random interior cuts
/// on each axis and exponential cell weights.
pub fn random_histogram<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<BoxHistogram> {
    let shape = grid_shape(k, d)?;
    let cuts = shape
        .iter()
        .map(|&n| {
            let mut c: Vec<f64> = (1..n).map(|_| rng.random::<f64>()).collect();
            c.push(0.0);
            c.push(1.0);
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect::<Vec<_>>();
    let cells: usize = cuts.iter().map(|c| c.len() - 1).product();
    let weights = (0..cells).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    BoxHistogram::new(cuts, weights)
}
