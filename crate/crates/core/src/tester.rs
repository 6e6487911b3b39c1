//! The end-to-end `A_k` closeness tester and its two reductions.
//!
//! Pipeline for one invocation:
//!
//! 1. draw `Poi(m)` labeled samples from `(p + q) / 2`;
//! 2. rank-transform them, breaking ties at random;
//! 3. pad with synthetic points above the top rank until there are `2^j + 1`;
//! 4. build the sample-point grid and its dyadic covering;
//! 5. simulate the induced distributions `p^F`, `q^F` from fresh samples;
//! 6. run flatten-then-test with `s = ceil(s_mult * k * (log2 m')^d)` at
//!    accuracy `sqrt(kappa)`.
//!
//! Only ranks reach stage 4 and later, and fresh samples are placed in rank
//! space by comparisons alone, so the decision is unchanged by any strictly
//! increasing per-axis transform of the inputs.

use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::covering::{CoverFamily, InducedOutcome, SamplePointGrid, MAX_DIM};
use crate::distributions::{
    poisson, rank_transform, LabeledSample, RankedSampleSet, Source, SENTINEL_COORD,
};
use crate::flatten_l2::{flatten_closeness, L2Params, SampleAccess};
use crate::geometry::AxisRectangle;
use crate::{rng_from_seed, Error, Result};

pub use crate::flatten_l2::{Decision, TestVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Formula-exact constants with the doubly exponential `alpha_d`.
    Paper,
    /// Frozen small constants and an effective exponent.
    #[default]
    Practical,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Mode::Paper),
            "practical" => Ok(Mode::Practical),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Constants of the budget and threshold formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TesterConstants {
    /// `C'` in the sample budget.
    pub budget_c: f64,
    /// `c` in `kappa`.
    pub kappa_c: f64,
    /// `C` in `alpha_d = C d^2 2^(2^(d+1))` (paper mode).
    pub alpha_c: f64,
    /// Exponent used in place of `alpha_d` (practical mode).
    pub alpha_eff: f64,
    /// `C` in the consistency condition `m >= C max(kappa^(-2/3), kappa^(-1)/sqrt(k))`.
    pub consistency_c: f64,
    /// `c_r` of the robust `l2` tester.
    pub robust_c: f64,
    /// `c_f` of the flattening step.
    pub flatten_c: f64,
    /// Multiplier on `s = k (log2 m)^d`.
    pub s_multiplier: f64,
    /// Multiplier on the number of samples drawn by the `l2` stage.
    pub budget_multiplier: f64,
}

impl TesterConstants {
    pub const PAPER: Self = Self {
        budget_c: 1.0,
        kappa_c: 1.0,
        alpha_c: 1.0,
        alpha_eff: 1.0,
        consistency_c: 1.0,
        robust_c: 4.0,
        flatten_c: 2.0,
        s_multiplier: 1.0,
        budget_multiplier: 1.0,
    };

    /// Frozen practical defaults; `config/practical.toml` holds the same values.
    pub const PRACTICAL: Self = Self {
        budget_c: 4.0,
        kappa_c: 0.02,
        alpha_c: 1.0,
        alpha_eff: 1.0,
        consistency_c: 1.0,
        robust_c: 4.0,
        flatten_c: 2.0,
        s_multiplier: 128.0,
        budget_multiplier: 1.0,
    };

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Paper => Self::PAPER,
            Mode::Practical => Self::PRACTICAL,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("constants serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("budget_c", self.budget_c),
            ("kappa_c", self.kappa_c),
            ("alpha_c", self.alpha_c),
            ("alpha_eff", self.alpha_eff),
            ("consistency_c", self.consistency_c),
            ("robust_c", self.robust_c),
            ("flatten_c", self.flatten_c),
            ("s_multiplier", self.s_multiplier),
            ("budget_multiplier", self.budget_multiplier),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn l2_params(&self) -> L2Params {
        L2Params {
            robust_c: self.robust_c,
            flatten_c: self.flatten_c,
            repetitions: 3,
            sample_scale: self.budget_multiplier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TesterConfig {
    pub k: usize,
    pub d: usize,
    pub eps: f64,
    pub mode: Mode,
    pub constants: TesterConstants,
    pub seed: u64,
}

impl TesterConfig {
    /// Configuration with the mode's default constants.
    pub fn new(k: usize, d: usize, eps: f64, mode: Mode, seed: u64) -> Result<Self> {
        let cfg = Self { k, d, eps, mode, constants: TesterConstants::for_mode(mode), seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be >= 2, got {}", self.k)));
        }
        if self.d == 0 || self.d > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "d must be in 1..={MAX_DIM}, got {}",
                self.d
            )));
        }
        if !(self.eps > 0.0 && self.eps <= 2.0) {
            return Err(Error::InvalidArgument(format!("eps must be in (0, 2], got {}", self.eps)));
        }
        self.constants.validate()
    }

    /// The exponent of `eps`: `alpha_d` in paper mode, the effective
    /// exponent in practical mode.
    pub fn alpha(&self) -> f64 {
        match self.mode {
            Mode::Paper => {
                let d = self.d as f64;
                self.constants.alpha_c * d * d * 2f64.powf(2f64.powi(self.d as i32 + 1))
            }
            Mode::Practical => self.constants.alpha_eff,
        }
    }
}

/// `m = ceil(C' k^(6/7) eps^(-2 alpha / 3) (log2 k)^d 2^(d/3))`.
pub fn sample_budget(cfg: &TesterConfig) -> Result<u64> {
    cfg.validate()?;
    let k = cfg.k as f64;
    let d = cfg.d as f64;
    let m = cfg.constants.budget_c
        * k.powf(6.0 / 7.0)
        * cfg.eps.powf(-2.0 * cfg.alpha() / 3.0)
        * k.log2().powf(d)
        * 2f64.powf(d / 3.0);
    // Snap values that are integers up to rounding error, so exact integer
    // budgets do not gain one from a stray ulp.
    let nearest = m.round();
    let m = if (m - nearest).abs() <= 1e-9 * m { nearest } else { m.ceil() };
    if !m.is_finite() || m >= u64::MAX as f64 {
        return Err(Error::Overflow(format!("sample budget {m:e} does not fit in 64 bits")));
    }
    Ok(m as u64)
}

/// `kappa = c 2^(-d) (log2 k)^(-3d) (eps/4)^(2 alpha) m^2 / k^3`.
pub fn kappa(cfg: &TesterConfig, m: u64) -> f64 {
    let k = cfg.k as f64;
    let d = cfg.d as f64;
    let m = m as f64;
    cfg.constants.kappa_c
        * 2f64.powf(-d)
        * k.log2().powf(-3.0 * d)
        * (cfg.eps / 4.0).powf(2.0 * cfg.alpha())
        * m
        * m
        / (k * k * k)
}

/// Whether `m >= C max(kappa^(-2/3), kappa^(-1) / sqrt(k))`.
pub fn budget_is_consistent(cfg: &TesterConfig, m: u64) -> bool {
    let kap = kappa(cfg, m);
    let need = cfg.constants.consistency_c
        * kap.powf(-2.0 / 3.0).max(1.0 / (kap * (cfg.k as f64).sqrt()));
    m as f64 >= need
}

/// Size of the padded sample: the least `2^j + 1 >= max(n, 3)`.
pub fn padded_size(n: usize) -> usize {
    let need = n.max(3) - 1;
    need.next_power_of_two() + 1
}

/// Run the tester with a generator seeded from `cfg.seed`.
pub fn ak_closeness_test(
    p: &mut dyn SampleAccess<Vec<f64>>,
    q: &mut dyn SampleAccess<Vec<f64>>,
    cfg: &TesterConfig,
) -> Result<TestVerdict> {
    ak_closeness_test_with_rng(p, q, cfg, &mut rng_from_seed(cfg.seed))
}

pub fn ak_closeness_test_with_rng(
    p: &mut dyn SampleAccess<Vec<f64>>,
    q: &mut dyn SampleAccess<Vec<f64>>,
    cfg: &TesterConfig,
    rng: &mut dyn RngCore,
) -> Result<TestVerdict> {
    let m = sample_budget(cfg)?;
    if cfg.mode == Mode::Paper && !budget_is_consistent(cfg, m) {
        return Err(Error::InvalidArgument(format!(
            "budget m = {m} violates m >= C max(kappa^(-2/3), kappa^(-1)/sqrt(k)); raise budget_c"
        )));
    }
    let kap = kappa(cfg, m);

    let n = poisson(m as f64, rng)? as usize;
    let mut labeled = Vec::with_capacity(n);
    for _ in 0..n {
        let label = if rng.random_bool(0.5) { Source::P } else { Source::Q };
        let point = match label {
            Source::P => p.sample(rng),
            Source::Q => q.sample(rng),
        }
        .ok_or_else(|| Error::DegenerateAccess(format!("{label:?} produced no sample")))?;
        crate::check_dim(cfg.d, point.len())?;
        labeled.push(LabeledSample { point, label });
    }

    let (ranked, grid) = if labeled.is_empty() {
        (None, synthetic_grid(cfg.d, 0, 3)?)
    } else {
        let ranked = rank_transform(&labeled, rng)?;
        let mut points = ranked.rank_points();
        let base = points.len();
        points.extend(
            (1..=padded_size(base) - base).map(|t| vec![(base + t) as f64; cfg.d]),
        );
        let grid = SamplePointGrid::build(&crate::geometry::PointSet::new(points)?)?;
        (Some(ranked), grid)
    };
    let family = CoverFamily::build(&grid);

    let s = (cfg.constants.s_multiplier
        * cfg.k as f64
        * (family.levels() as f64).powi(cfg.d as i32))
    .ceil() as u64;

    let ranked = ranked.as_ref();
    let mut pf = |r: &mut dyn RngCore| induced_sample(p, ranked, &family, cfg.d, r);
    let mut qf = |r: &mut dyn RngCore| induced_sample(q, ranked, &family, cfg.d, r);
    let mut verdict =
        flatten_closeness(&mut pf, &mut qf, s, kap.sqrt(), &cfg.constants.l2_params(), rng)?;
    verdict.samples_used += n as u64;
    verdict.kappa = Some(kap);
    Ok(verdict)
}

/// One draw of the induced distribution: a fresh sample placed in rank
/// space and pushed to a random covering rectangle.
fn induced_sample(
    access: &mut dyn SampleAccess<Vec<f64>>,
    ranked: Option<&RankedSampleSet>,
    family: &CoverFamily,
    d: usize,
    rng: &mut dyn RngCore,
) -> Option<InducedOutcome> {
    let x = access.sample(rng)?;
    if x.len() != d {
        return None;
    }
    let z = match ranked {
        Some(set) => set.embed(&x, rng),
        // No real samples: every fresh point sits below the padding.
        None => vec![0.5; d],
    };
    Some(family.induced_outcome(&z, rng))
}

fn synthetic_grid(d: usize, base: usize, count: usize) -> Result<SamplePointGrid> {
    let points = (1..=count).map(|t| vec![(base + t) as f64; d]).collect();
    SamplePointGrid::build(&crate::geometry::PointSet::new(points)?)
}

/// Total-variation test for two histograms over a common partition into `k`
/// boxes, where the `A_k` distance is twice the total variation distance.
/// `cfg.eps` is the total-variation accuracy; the delegate runs at
/// `min(2 eps, 2)`.
pub fn tv_histogram_test(
    p: &mut dyn SampleAccess<Vec<f64>>,
    q: &mut dyn SampleAccess<Vec<f64>>,
    cfg: &TesterConfig,
) -> Result<TestVerdict> {
    if !(cfg.eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {}", cfg.eps)));
    }
    let delegate = TesterConfig { eps: (2.0 * cfg.eps).min(2.0), ..cfg.clone() };
    ak_closeness_test(p, q, &delegate)
}

/// Equivalence test for two hypotheses given by labeled uniform samples on
/// the unit cube. Positively labeled points are kept; the rest are sent to
/// the sentinel point `(-1, ..., -1)`. The delegate runs at `eps / 2`.
pub fn hypothesis_equivalence_test(
    h1: &mut dyn SampleAccess<(Vec<f64>, bool)>,
    h2: &mut dyn SampleAccess<(Vec<f64>, bool)>,
    cfg: &TesterConfig,
) -> Result<TestVerdict> {
    let d = cfg.d;
    let reduce = |(x, label): (Vec<f64>, bool)| if label { x } else { vec![SENTINEL_COORD; d] };
    let mut p = |r: &mut dyn RngCore| h1.sample(r).map(reduce);
    let mut q = |r: &mut dyn RngCore| h2.sample(r).map(reduce);
    let delegate = TesterConfig { eps: cfg.eps / 2.0, ..cfg.clone() };
    ak_closeness_test(&mut p, &mut q, &delegate)
}

/// A union of boxes used as a binary hypothesis on the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleUnion {
    rects: Vec<AxisRectangle>,
    dim: usize,
}

impl RectangleUnion {
    pub fn new(rects: Vec<AxisRectangle>) -> Result<Self> {
        let dim = rects
            .first()
            .map(AxisRectangle::dim)
            .ok_or_else(|| Error::InvalidArgument("empty rectangle union".into()))?;
        for r in &rects {
            crate::check_dim(dim, r.dim())?;
        }
        Ok(Self { rects, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rects(&self) -> &[AxisRectangle] {
        &self.rects
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.rects.iter().any(|r| r.contains_unchecked(x))
    }

    /// Exact volume of the union clipped to the unit cube, by coordinate
    /// compression.
    pub fn area_in_unit_cube(&self) -> f64 {
        let clipped: Vec<(Vec<f64>, Vec<f64>)> = self
            .rects
            .iter()
            .filter_map(|r| {
                let lo: Vec<f64> = r.lo().iter().map(|v| v.clamp(0.0, 1.0)).collect();
                let hi: Vec<f64> = r.hi().iter().map(|v| v.clamp(0.0, 1.0)).collect();
                lo.iter().zip(&hi).all(|(a, b)| a < b).then_some((lo, hi))
            })
            .collect();
        let cuts: Vec<Vec<f64>> = (0..self.dim)
            .map(|a| {
                let mut c: Vec<f64> =
                    clipped.iter().flat_map(|(lo, hi)| [lo[a], hi[a]]).collect();
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            })
            .collect();
        if cuts.iter().any(|c| c.len() < 2) {
            return 0.0;
        }
        let mut total = 0.0;
        let mut cell = vec![0usize; self.dim];
        loop {
            let mid: Vec<f64> =
                (0..self.dim).map(|a| 0.5 * (cuts[a][cell[a]] + cuts[a][cell[a] + 1])).collect();
            if clipped
                .iter()
                .any(|(lo, hi)| (0..self.dim).all(|a| lo[a] <= mid[a] && mid[a] <= hi[a]))
            {
                total += (0..self.dim).map(|a| cuts[a][cell[a] + 1] - cuts[a][cell[a]]).product::<f64>();
            }
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return total;
                }
                cell[axis] += 1;
                if cell[axis] + 1 < cuts[axis].len() {
                    break;
                }
                cell[axis] = 0;
                axis += 1;
            }
        }
    }

    /// Mass the reduction puts on the sentinel point.
    pub fn sentinel_mass(&self) -> f64 {
        1.0 - self.area_in_unit_cube()
    }

    /// Labeled uniform samples on the unit cube.
    pub fn labeled_access(&self) -> impl FnMut(&mut dyn RngCore) -> Option<(Vec<f64>, bool)> + '_ {
        move |r: &mut dyn RngCore| {
            let x: Vec<f64> = (0..self.dim).map(|_| r.random::<f64>()).collect();
            let label = self.contains(&x);
            Some((x, label))
        }
    }
}
