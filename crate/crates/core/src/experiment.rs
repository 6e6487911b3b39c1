//! Seeded, parallel trial harness.
//!
//! A run expands the sweep axes of an [`ExperimentConfig`] into cases, runs
//! `trials` independent trials per case and writes one CSV row per trial.
//! Trial `i` of the run uses seed `derive_seed(config.seed, i)`, so serial and
//! parallel runs produce identical rows. Rows are written in trial order to a
//! temporary file that is renamed into place, next to a TOML snapshot of the
//! resolved config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteGridDistribution, GridSampler};
use crate::families::{planted_pair, random_histogram, BoxHistogram, SignPattern};
use crate::flatten_l2::SampleAccess;
use crate::hardness::{gen_hard_instance, GadgetMeasure};
use crate::tester::{ak_closeness_test, sample_budget, Decision, Mode, TestVerdict, TesterConfig, TesterConstants};
use crate::{derive_seed, rng_from_seed, Error, Result};

/// Value of the `schema` column.
pub const CSV_SCHEMA: &str = "akct-results-v1";

pub const CSV_HEADER: [&str; 12] =
    ["schema", "trial", "seed", "family", "k", "d", "eps", "m", "verdict", "statistic", "threshold", "wall_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `p = q =` uniform on `{1..grid_n}^d`.
    UniformGrid,
    /// `p = q =` a fresh random `k`-cell histogram per trial.
    RandomHistogram,
    /// Planted pair at `A_k` distance `planted_distance`, checkerboard signs.
    PlantedCheckerboard,
    /// Planted pair with a random balanced sign arrangement.
    PlantedBalanced,
    /// Heavy/light diagonal instance with `p = q`.
    HardEqual,
    /// Heavy/light diagonal instance with opposite light gadgets.
    HardFar,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::UniformGrid => "uniform-grid",
            Family::RandomHistogram => "random-histogram",
            Family::PlantedCheckerboard => "planted-checkerboard",
            Family::PlantedBalanced => "planted-balanced",
            Family::HardEqual => "hard-equal",
            Family::HardFar => "hard-far",
        }
    }

    /// Whether the family has `p = q`.
    pub fn is_equal(self) -> bool {
        matches!(self, Family::UniformGrid | Family::RandomHistogram | Family::HardEqual)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown family {s:?}")))
    }
}

fn default_d() -> usize {
    2
}
fn default_multiplier() -> Vec<f64> {
    vec![1.0]
}
fn default_grid_n() -> usize {
    32
}
fn default_planted_distance() -> f64 {
    1.0
}
fn default_hard_m() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub mode: Mode,
    /// Overrides the mode's default constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<TesterConstants>,
    pub families: Vec<Family>,
    pub k: Vec<usize>,
    #[serde(default = "default_d")]
    pub d: usize,
    pub eps: Vec<f64>,
    /// Values of `budget_multiplier` to sweep.
    #[serde(default = "default_multiplier")]
    pub m_multiplier: Vec<f64>,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_planted_distance")]
    pub planted_distance: f64,
    /// The `m` of the hard-instance construction.
    #[serde(default = "default_hard_m")]
    pub hard_m: usize,
    /// Record wall-clock milliseconds; off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.families.is_empty() || self.k.is_empty() || self.eps.is_empty() || self.m_multiplier.is_empty() {
            return Err(Error::InvalidArgument("every sweep axis needs at least one value".into()));
        }
        if self.m_multiplier.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidArgument("m_multiplier values must be > 0".into()));
        }
        if !(self.planted_distance > 0.0 && self.planted_distance <= 2.0) {
            return Err(Error::InvalidArgument("planted_distance must be in (0, 2]".into()));
        }
        if self.grid_n == 0 {
            return Err(Error::InvalidArgument("grid_n must be >= 1".into()));
        }
        for case in self.cases() {
            let cfg = case.tester_config(self, 0)?;
            if matches!(case.family, Family::HardEqual | Family::HardFar) && self.d != 2 {
                return Err(Error::InvalidArgument("hard families are planar; set d = 2".into()));
            }
            cfg.validate()?;
        }
        Ok(())
    }

    /// Sweep points in row order: family, then k, eps, multiplier.
    pub fn cases(&self) -> Vec<Case> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &k in &self.k {
                for &eps in &self.eps {
                    for &multiplier in &self.m_multiplier {
                        out.push(Case { family, k, eps, multiplier });
                    }
                }
            }
        }
        out
    }

    pub fn total_trials(&self) -> usize {
        self.cases().len() * self.trials
    }
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case {
    pub family: Family,
    pub k: usize,
    pub eps: f64,
    pub multiplier: f64,
}

impl Case {
    /// Instance descriptor stored in the `family` column.
    pub fn descriptor(&self) -> String {
        format!("{}@x{}", self.family.name(), self.multiplier)
    }

    fn tester_config(&self, exp: &ExperimentConfig, seed: u64) -> Result<TesterConfig> {
        let mut constants = exp.constants.unwrap_or_else(|| TesterConstants::for_mode(exp.mode));
        constants.budget_multiplier = self.multiplier;
        let cfg = TesterConfig { k: self.k, d: exp.d, eps: self.eps, mode: exp.mode, constants, seed };
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Instance {
    Grid(GridSampler, GridSampler),
    Histogram(BoxHistogram, BoxHistogram),
    Gadgets(GadgetMeasure, GadgetMeasure),
}

impl Instance {
    fn generate(case: &Case, exp: &ExperimentConfig, rng: &mut dyn RngCore) -> Result<Self> {
        Ok(match case.family {
            Family::UniformGrid => {
                let s = DiscreteGridDistribution::uniform_grid(exp.grid_n, exp.d)?.sampler()?;
                Instance::Grid(s.clone(), s)
            }
            Family::RandomHistogram => {
                let h = random_histogram(case.k, exp.d, rng)?;
                Instance::Histogram(h.clone(), h)
            }
            Family::PlantedCheckerboard | Family::PlantedBalanced => {
                let pattern = if case.family == Family::PlantedCheckerboard {
                    SignPattern::Checkerboard
                } else {
                    SignPattern::Balanced
                };
                let (p, q) = planted_pair(case.k, exp.d, exp.planted_distance / 2.0, pattern, rng)?;
                Instance::Histogram(p, q)
            }
            Family::HardEqual | Family::HardFar => {
                let inst = gen_hard_instance(
                    case.k,
                    exp.hard_m,
                    case.eps.min(1.0),
                    case.family == Family::HardEqual,
                    rng,
                )?;
                Instance::Gadgets(inst.p, inst.q)
            }
        })
    }

    fn run(&self, cfg: &TesterConfig) -> Result<TestVerdict> {
        match self {
            Instance::Grid(p, q) => run_pair(|r| p.sample(r), |r| q.sample(r), cfg),
            Instance::Histogram(p, q) => run_pair(|r| p.sample(r), |r| q.sample(r), cfg),
            Instance::Gadgets(p, q) => run_pair(|r| p.sample(r).to_vec(), |r| q.sample(r).to_vec(), cfg),
        }
    }
}

fn run_pair(
    mut p: impl FnMut(&mut dyn RngCore) -> Vec<f64>,
    mut q: impl FnMut(&mut dyn RngCore) -> Vec<f64>,
    cfg: &TesterConfig,
) -> Result<TestVerdict> {
    let mut pa = |r: &mut dyn RngCore| Some(p(r));
    let mut qa = |r: &mut dyn RngCore| Some(q(r));
    let pa: &mut dyn SampleAccess<Vec<f64>> = &mut pa;
    let qa: &mut dyn SampleAccess<Vec<f64>> = &mut qa;
    ak_closeness_test(pa, qa, cfg)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema: String,
    pub trial: usize,
    pub seed: u64,
    pub family: String,
    pub k: usize,
    pub d: usize,
    pub eps: f64,
    /// Samples drawn by the trial, both stages included; empty on error.
    pub m: Option<u64>,
    /// `accept`, `reject` or `error`.
    pub verdict: String,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub wall_ms: u64,
}

impl ResultRow {
    pub fn decision(&self) -> Option<Decision> {
        match self.verdict.as_str() {
            "accept" => Some(Decision::Accept),
            "reject" => Some(Decision::Reject),
            _ => None,
        }
    }
}

/// Run trial `trial` of the experiment (trials are numbered across cases).
pub fn run_trial(exp: &ExperimentConfig, trial: usize) -> (ResultRow, Option<Error>) {
    let cases = exp.cases();
    let case = cases[trial / exp.trials];
    let seed = derive_seed(exp.seed, trial as u64);
    let start = Instant::now();
    let outcome = case.tester_config(exp, seed).and_then(|cfg| {
        let mut rng = rng_from_seed(derive_seed(seed, 1));
        Instance::generate(&case, exp, &mut rng)?.run(&cfg)
    });
    let wall_ms = if exp.record_wall_time { start.elapsed().as_millis() as u64 } else { 0 };
    let mut row = ResultRow {
        schema: CSV_SCHEMA.into(),
        trial,
        seed,
        family: case.descriptor(),
        k: case.k,
        d: exp.d,
        eps: case.eps,
        m: None,
        verdict: "error".into(),
        statistic: None,
        threshold: None,
        wall_ms,
    };
    match outcome {
        Ok(v) => {
            row.m = Some(v.samples_used);
            row.verdict = if v.rejected() { "reject" } else { "accept" }.into();
            row.statistic = Some(v.statistic);
            row.threshold = Some(v.threshold);
            (row, None)
        }
        Err(e) => (row, Some(e)),
    }
}

/// Run every trial on `jobs` worker threads (0 = all cores). Rows come back
/// in trial order; failed trials are reported as `error` rows with their
/// messages alongside.
pub fn run_experiment(exp: &ExperimentConfig, jobs: usize) -> Result<(Vec<ResultRow>, Vec<(usize, String)>)> {
    use rayon::prelude::*;
    exp.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(ResultRow, Option<Error>)> =
        pool.install(|| (0..exp.total_trials()).into_par_iter().map(|t| run_trial(exp, t)).collect());
    let mut errors = Vec::new();
    let rows = results
        .into_iter()
        .map(|(row, err)| {
            if let Some(e) = err {
                errors.push((row.trial, e.to_string()));
            }
            row
        })
        .collect();
    Ok((rows, errors))
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::Parse(e.to_string()))).collect()
}

/// Path of the config snapshot written next to a results file.
pub fn snapshot_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.toml");
    out.with_file_name(name)
}

/// Write the rows and the config snapshot. The CSV is written to a
/// temporary file first and renamed into place.
pub fn write_results(out: &Path, exp: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    let bytes = rows_to_csv(rows)?;
    let mut tmp = out.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, out)?;
    std::fs::write(snapshot_path(out), exp.to_toml_string())?;
    Ok(())
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per-case aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub family: String,
    pub k: usize,
    pub eps: f64,
    pub trials: usize,
    pub errors: usize,
    pub accept_rate: f64,
    /// 95% Wilson interval on the accept rate.
    pub ci: (f64, f64),
    pub mean_samples: f64,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<CaseSummary> {
    let mut groups: BTreeMap<(String, usize, u64), Vec<&ResultRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows {
        let key = (r.family.clone(), r.k, r.eps.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let ok: Vec<&&ResultRow> = g.iter().filter(|r| r.decision().is_some()).collect();
            let accepts = ok.iter().filter(|r| r.decision() == Some(Decision::Accept)).count();
            let mean_samples = if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|r| r.m.unwrap_or(0) as f64).sum::<f64>() / ok.len() as f64
            };
            CaseSummary {
                family: key.0.clone(),
                k: key.1,
                eps: f64::from_bits(key.2),
                trials: g.len(),
                errors: g.len() - ok.len(),
                accept_rate: if ok.is_empty() { 0.0 } else { accepts as f64 / ok.len() as f64 },
                ci: wilson_interval(accepts, ok.len(), 1.959_963_984_540_054),
                mean_samples,
            }
        })
        .collect()
}

/// Human-readable summary table.
pub fn format_summary(summary: &[CaseSummary]) -> String {
    let mut s = format!(
        "{:<28} {:>5} {:>6} {:>7} {:>7} {:>8} {:>17} {:>12}\n",
        "family", "k", "eps", "trials", "errors", "accept", "95% CI", "mean m"
    );
    for c in summary {
        s.push_str(&format!(
            "{:<28} {:>5} {:>6} {:>7} {:>7} {:>8.3} {:>17} {:>12.0}\n",
            c.family,
            c.k,
            c.eps,
            c.trials,
            c.errors,
            c.accept_rate,
            format!("[{:.3}, {:.3}]", c.ci.0, c.ci.1),
            c.mean_samples
        ));
    }
    s
}

/// Nominal budget of a case, for reporting.
pub fn nominal_budget(exp: &ExperimentConfig, case: &Case) -> Result<u64> {
    sample_budget(&case.tester_config(exp, 0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
            seed = 7
            trials = 3
            families = ["uniform-grid", "planted-checkerboard"]
            k = [4]
            eps = [1.0]
            grid_n = 4
            "#,
        )
        .unwrap()
    }

    #[test]
    fn config_defaults_and_cases() {
        let c = small();
        assert_eq!(c.mode, Mode::Practical);
        assert_eq!(c.d, 2);
        assert_eq!(c.cases().len(), 2);
        assert_eq!(c.total_trials(), 6);
        assert!(ExperimentConfig::from_toml_str("seed = 1\ntrials = 0\nfamilies = []\nk = []\neps = []").is_err());
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let c = small();
        let (a, ea) = run_experiment(&c, 1).unwrap();
        let (b, _) = run_experiment(&c, 2).unwrap();
        assert!(ea.is_empty());
        assert_eq!(rows_to_csv(&a).unwrap(), rows_to_csv(&b).unwrap());
        let text = String::from_utf8(rows_to_csv(&a).unwrap()).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }
}
