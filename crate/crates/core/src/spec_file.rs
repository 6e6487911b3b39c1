//! JSON distribution-spec files.
//!
//! ```json
//! {"dim": 2, "axes": [[0.0, 1.0], [0.0, 0.5]],
//!  "mass": [{"idx": [0, 1], "w": 0.25}, {"idx": [1, 0], "w": 0.75}],
//!  "normalized": true}
//! ```
//!
//! Numbers are decimal strings parsed with correct rounding, so writing and
//! re-reading a file reproduces every `f64` bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteGridDistribution, NORMALIZATION_TOL};
use crate::hardness::{HardInstance, SquareAssignment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassEntry {
    pub idx: Vec<usize>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub dim: usize,
    pub axes: Vec<Vec<f64>>,
    pub mass: Vec<MassEntry>,
    /// Declares that the masses sum to 1; checked on load.
    pub normalized: bool,
}

impl DistributionSpec {
    pub fn from_distribution(dist: &DiscreteGridDistribution) -> Self {
        Self {
            dim: dist.dim(),
            axes: dist.axes().to_vec(),
            mass: dist.masses().iter().map(|(idx, &w)| MassEntry { idx: idx.clone(), w }).collect(),
            normalized: dist.is_normalized(),
        }
    }

    pub fn to_distribution(&self) -> Result<DiscreteGridDistribution> {
        if self.axes.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: self.axes.len() });
        }
        let mut mass = BTreeMap::new();
        for e in &self.mass {
            if mass.insert(e.idx.clone(), e.w).is_some() {
                return Err(Error::Parse(format!("index {:?} listed twice", e.idx)));
            }
        }
        let dist = DiscreteGridDistribution::new(self.axes.clone(), mass)?;
        if self.normalized && (dist.total_mass() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Parse(format!(
                "file declares normalized but masses sum to {}",
                dist.total_mass()
            )));
        }
        if !(dist.total_mass() > 0.0) {
            return Err(Error::Parse("distribution has no mass".into()));
        }
        Ok(dist)
    }
}

pub fn parse_spec(text: &str) -> Result<DiscreteGridDistribution> {
    let spec: DistributionSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.to_distribution()
}

pub fn read_spec(path: &Path) -> Result<DiscreteGridDistribution> {
    parse_spec(&std::fs::read_to_string(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Pretty-printed JSON with a trailing newline.
pub fn spec_to_string(dist: &DiscreteGridDistribution) -> String {
    let mut s = serde_json::to_string_pretty(&DistributionSpec::from_distribution(dist))
        .expect("spec serializes");
    s.push('\n');
    s
}

pub fn write_spec(path: &Path, dist: &DiscreteGridDistribution) -> Result<()> {
    std::fs::write(path, spec_to_string(dist))?;
    Ok(())
}

/// Metadata written next to the two spec files of a hard instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceMetadata {
    pub equal_case: bool,
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    pub eps: f64,
    pub r: usize,
    /// Grid cells per unit length used when rounding to distribution files.
    pub resolution: usize,
    pub heavy_count: usize,
    pub light_count: usize,
    pub squares: Vec<SquareAssignment>,
}

impl HardInstanceMetadata {
    pub fn new(inst: &HardInstance, seed: u64, resolution: usize) -> Self {
        Self {
            equal_case: inst.equal_case,
            seed,
            k: inst.k,
            m: inst.m,
            eps: inst.eps,
            r: inst.r,
            resolution,
            heavy_count: inst.heavy_count(),
            light_count: inst.light_count(),
            squares: inst.squares.clone(),
        }
    }
}

/// Paths written by [`write_hard_instance`].
#[derive(Debug, Clone)]
pub struct HardInstanceFiles {
    pub p: std::path::PathBuf,
    pub q: std::path::PathBuf,
    pub meta: std::path::PathBuf,
}

/// Write `p.json`, `q.json` and `meta.json` into `dir`. Both measures are
/// rounded to the grid of `resolution` cells per unit and normalized.
pub fn write_hard_instance(
    dir: &Path,
    inst: &HardInstance,
    seed: u64,
    resolution: usize,
) -> Result<HardInstanceFiles> {
    std::fs::create_dir_all(dir)?;
    let files = HardInstanceFiles { p: dir.join("p.json"), q: dir.join("q.json"), meta: dir.join("meta.json") };
    write_spec(&files.p, &inst.p.discretize(resolution)?.normalized()?)?;
    write_spec(&files.q, &inst.q.discretize(resolution)?.normalized()?)?;
    let mut meta = serde_json::to_string_pretty(&HardInstanceMetadata::new(inst, seed, resolution))
        .expect("metadata serializes");
    meta.push('\n');
    std::fs::write(&files.meta, meta)?;
    Ok(files)
}
