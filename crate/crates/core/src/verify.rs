//! Named invariant suites run by `akct verify`.
//!
//! Each suite draws its random inputs from a seeded generator and returns a
//! [`Report`] with one line per checked statement.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::covering::{CoverFamily, SamplePointGrid};
use crate::flatten_l2::SplitMap;
use crate::geometry::{erdos_szekeres_threshold, find_dominating_triple, AxisRectangle, PointSet};
use crate::hardness::{
    order_tuple, order_tuple_distribution_distance, MonotoneMap, Quadrant, SquareEdgeGadget, Variant,
};
use crate::distributions::{LabeledSample, Source};
use crate::{rng_from_seed, Error, Result, TestRng};

/// A planar 4-point set with no point inside the box spanned by two others.
pub const NO_TRIPLE_WITNESS: [[f64; 2]; 4] = [[1.0, 2.0], [2.0, 4.0], [3.0, 1.0], [4.0, 3.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Covering,
    SquareEdge,
    OrderTuples,
    DominatingTriple,
    CarveComplement,
    SplitDistribution,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Covering,
        Suite::SquareEdge,
        Suite::OrderTuples,
        Suite::DominatingTriple,
        Suite::CarveComplement,
        Suite::SplitDistribution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Covering => "covering",
            Suite::SquareEdge => "square-edge",
            Suite::OrderTuples => "order-tuples",
            Suite::DominatingTriple => "dominating-triple",
            Suite::CarveComplement => "carve-complement",
            Suite::SplitDistribution => "split-distribution",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidArgument(format!("unknown suite {s:?}; known: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// The statement being checked.
    pub statement: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, statement: &str, passed: bool, detail: String) {
        self.checks.push(Check { statement: statement.into(), passed, detail });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}", self.suite.name())?;
        for c in &self.checks {
            writeln!(f, "  {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.statement, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "some checks FAILED" })
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Report> {
    let mut rng = rng_from_seed(seed);
    let mut report = Report { suite, checks: Vec::new() };
    match suite {
        Suite::Covering => covering(&mut report, &mut rng)?,
        Suite::SquareEdge => square_edge(&mut report)?,
        Suite::OrderTuples => order_tuples(&mut report, &mut rng)?,
        Suite::DominatingTriple => dominating_triple(&mut report, &mut rng)?,
        Suite::CarveComplement => carve_complement(&mut report, &mut rng)?,
        Suite::SplitDistribution => split_distribution(&mut report, &mut rng)?,
    }
    Ok(report)
}

/// `m + 1` points whose per-axis coordinates are independent random
/// permutations of `1..=m+1`.
pub fn random_generic_points(m: usize, d: usize, rng: &mut TestRng) -> PointSet {
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let mut c: Vec<f64> = (1..=m + 1).map(|v| v as f64).collect();
            c.shuffle(rng);
            c
        })
        .collect();
    let points = (0..=m).map(|i| cols.iter_mut().map(|c| c[i]).collect()).collect();
    PointSet::new(points).expect("consistent dimension")
}

/// Gap range `[start, end)` of a dyadic interval.
fn gap_range(m: usize, level: u32, index: usize) -> (usize, usize) {
    let w = m >> level;
    (index * w, (index + 1) * w)
}

fn for_each_cell(m: usize, d: usize, mut f: impl FnMut(&[usize])) {
    let mut cell = vec![0usize; d];
    loop {
        f(&cell);
        let mut a = 0;
        while a < d {
            cell[a] += 1;
            if cell[a] < m {
                break;
            }
            cell[a] = 0;
            a += 1;
        }
        if a == d {
            return;
        }
    }
}

fn flat(cell: &[usize], m: usize) -> usize {
    cell.iter().rev().fold(0, |acc, &g| acc * m + g)
}

fn covering(report: &mut Report, rng: &mut TestRng) -> Result<()> {
    for m in [4usize, 8, 16] {
        for d in 1..=3usize {
            let grid = SamplePointGrid::build(&random_generic_points(m, d, rng))?;
            let family = CoverFamily::build(&grid);
            let levels = m.trailing_zeros();
            let expected = (levels as usize).pow(d as u32);

            // Count cell memberships straight from the dyadic gap ranges.
            let mut counts = vec![0usize; m.pow(d as u32)];
            let per_axis: Vec<(u32, usize)> =
                (1..=levels).flat_map(|l| (0..1usize << l).map(move |i| (l, i))).collect();
            let mut n_rects = 0usize;
            for_each_cell(per_axis.len(), d, |choice| {
                n_rects += 1;
                let ranges: Vec<(usize, usize)> =
                    choice.iter().map(|&c| gap_range(m, per_axis[c].0, per_axis[c].1)).collect();
                for_each_cell(m, d, |cell| {
                    if cell.iter().zip(&ranges).all(|(&g, &(a, b))| a <= g && g < b) {
                        counts[flat(cell, m)] += 1;
                    }
                });
            });
            let bad = counts.iter().filter(|&&c| c != expected).count();
            report.push(
                "every grid cell lies in exactly (log2 m)^d family rectangles",
                bad == 0 && n_rects == family.intervals_per_axis().pow(d as u32),
                format!("m={m} d={d}: {} cells, expected {expected}, {bad} mismatches", counts.len()),
            );

            // The library's own membership agrees at cell midpoints.
            let vals = grid.axis_values();
            let mut agree = true;
            for_each_cell(m, d, |cell| {
                let z: Vec<f64> = cell.iter().enumerate().map(|(a, &g)| 0.5 * (vals[a][g] + vals[a][g + 1])).collect();
                let keys = family.containing(&z).ok().flatten().unwrap_or_default();
                agree &= keys.len() == expected && keys.iter().all(|&k| family.contains(k, &z));
            });
            report.push(
                "containing() lists the same number of rectangles at every cell midpoint",
                agree,
                format!("m={m} d={d}"),
            );

            let limit = (2 * levels as usize).pow(d as u32);
            let mut worst = 0;
            let mut exact = true;
            for _ in 0..500 {
                let (lo, hi): (Vec<usize>, Vec<usize>) = (0..d)
                    .map(|_| {
                        let a = rng.random_range(0..m);
                        (a, rng.random_range(a + 1..=m))
                    })
                    .unzip();
                let rect = AxisRectangle::new(
                    lo.iter().enumerate().map(|(a, &g)| vals[a][g]).collect(),
                    hi.iter().enumerate().map(|(a, &g)| vals[a][g]).collect(),
                )?;
                let pieces = family.decompose_grid_rect(&rect)?;
                worst = worst.max(pieces.len());
                let mut cover = vec![0usize; m.pow(d as u32)];
                for key in &pieces {
                    let ranges: Vec<(usize, usize)> =
                        key.parts(d).into_iter().map(|(l, i)| gap_range(m, l, i)).collect();
                    for_each_cell(m, d, |cell| {
                        if cell.iter().zip(&ranges).all(|(&g, &(a, b))| a <= g && g < b) {
                            cover[flat(cell, m)] += 1;
                        }
                    });
                }
                for_each_cell(m, d, |cell| {
                    let inside = cell.iter().enumerate().all(|(a, &g)| lo[a] <= g && g < hi[a]);
                    exact &= cover[flat(cell, m)] == usize::from(inside);
                });
            }
            report.push(
                "grid-aligned boxes split into at most (2 log2 m)^d disjoint family rectangles with exact union",
                exact && worst <= limit,
                format!("m={m} d={d}: 500 boxes, max pieces {worst} (limit {limit})"),
            );
        }
    }
    Ok(())
}

/// Point at perimeter parameter `t in [0, 4)` of the unit diamond, starting
/// at the left vertex and running clockwise.
pub fn diamond_point(t: f64) -> [f64; 2] {
    let verts = [[-1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, -1.0]];
    let i = (t.floor() as usize).min(3);
    let s = t - i as f64;
    let (a, b) = (verts[i], verts[(i + 1) % 4]);
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

fn square_edge(report: &mut Report) -> Result<()> {
    let t = SquareEdgeGadget::new([0.0, 0.0], 1.0, Variant::T)?;
    let r = SquareEdgeGadget::new([0.0, 0.0], 1.0, Variant::R)?;
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let a = diamond_point(4.0 * i as f64 / 1000.0 + 1e-4);
        for quad in Quadrant::ALL {
            worst = worst.max((t.quadrant_mass(a, quad)? - r.quadrant_mass(a, quad)?).abs());
        }
    }
    report.push(
        "T and R give every open quadrant at an on-support point the same mass",
        worst <= 1e-12,
        format!("1000 support points x 4 quadrants, max difference {worst:e}"),
    );
    let corner = t.quadrant_mass([0.5, 0.5], Quadrant::One)? + r.quadrant_mass([0.5, 0.5], Quadrant::One)?;
    let top = (t.quadrant_mass([0.0, 1.0], Quadrant::Two)?, r.quadrant_mass([0.0, 1.0], Quadrant::Two)?);
    report.push(
        "quadrant examples",
        corner == 0.0 && top == (0.5, 0.5),
        format!("(0.5,0.5) upper-right mass {corner}; top vertex lower-left masses {top:?}"),
    );
    Ok(())
}

fn order_tuples(report: &mut Report, rng: &mut TestRng) -> Result<()> {
    const TRIALS: usize = 1_000_000;
    for m in 1..=3 {
        let e = order_tuple_distribution_distance(m, TRIALS, 200, rng)?;
        let limit = if m == 3 { (3.0 * e.stderr).max(0.01) } else { 3.0 * e.stderr };
        report.push(
            "order tuples of one equal-mixture gadget and of a random T/R pair agree for m <= 3",
            e.corrected.abs() <= limit,
            format!("m={m}: tv {:.5} (raw {:.5}), stderr {:.5}, {} cells", e.corrected, e.raw, e.stderr, e.cells),
        );
    }
    let e = order_tuple_distribution_distance(4, TRIALS, 200, rng)?;
    report.push(
        "the two cases separate at m = 4",
        e.corrected > 5.0 * e.stderr,
        format!("m=4: tv {:.5}, stderr {:.5}", e.corrected, e.stderr),
    );

    let mut invariant = true;
    for _ in 0..200 {
        let (fx, fy) = (MonotoneMap::sample(1e3, rng)?, MonotoneMap::sample(1e3, rng)?);
        let samples: Vec<LabeledSample> = (0..6)
            .map(|_| LabeledSample {
                point: vec![rng.random::<f64>(), rng.random::<f64>()],
                label: if rng.random_bool(0.5) { Source::P } else { Source::Q },
            })
            .collect();
        let mapped: Vec<LabeledSample> = samples
            .iter()
            .map(|s| LabeledSample { point: vec![fx.ln_excess(s.point[0]), fy.ln_excess(s.point[1])], label: s.label })
            .collect();
        invariant &= order_tuple(&samples)? == order_tuple(&mapped)?;
    }
    report.push(
        "order tuples are unchanged by random monotone maps per axis",
        invariant,
        "200 sets of 6 samples, W = 1e3".into(),
    );
    Ok(())
}

fn dominating_triple(report: &mut Report, rng: &mut TestRng) -> Result<()> {
    let values = (erdos_szekeres_threshold(3, 1)?, erdos_szekeres_threshold(3, 2)?);
    report.push("psi(3, 1) = 5 and psi(3, 2) = 17", values == (5, 17), format!("{values:?}"));
    let mut found = 0;
    for _ in 0..1000 {
        let set = PointSet::new((0..5).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect())?;
        if !set.is_generic() {
            continue;
        }
        found += usize::from(find_dominating_triple(&set)?.is_some());
    }
    report.push(
        "every generic 5-point planar set has a dominating triple",
        found == 1000,
        format!("{found} of 1000"),
    );
    let witness = PointSet::new(NO_TRIPLE_WITNESS.iter().map(|p| p.to_vec()).collect())?;
    let none = find_dominating_triple(&witness)?.is_none();
    report.push("the 4-point witness has none", none, format!("{NO_TRIPLE_WITNESS:?}"));
    Ok(())
}

fn random_box(d: usize, rng: &mut TestRng) -> AxisRectangle {
    let (lo, hi) = (0..d)
        .map(|_| {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            (a.min(b), a.max(b))
        })
        .unzip();
    AxisRectangle::new(lo, hi).expect("ordered")
}

fn carve_complement(report: &mut Report, rng: &mut TestRng) -> Result<()> {
    for d in 1..=3usize {
        let mut max_pieces = 0;
        let mut exact = true;
        for _ in 0..1000 {
            let outer = random_box(d, rng);
            let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
                .map(|a| {
                    let (l, h) = (outer.lo()[a], outer.hi()[a]);
                    let u = l + rng.random::<f64>() * (h - l);
                    let v = l + rng.random::<f64>() * (h - l);
                    (u.min(v), u.max(v))
                })
                .unzip();
            let inner = AxisRectangle::new(lo, hi)?;
            let pieces = outer.decompose_complement(&inner)?;
            max_pieces = max_pieces.max(pieces.len());
            for _ in 0..50 {
                let z: Vec<f64> = (0..d)
                    .map(|a| outer.lo()[a] + rng.random::<f64>() * (outer.hi()[a] - outer.lo()[a]))
                    .collect();
                let hits = pieces.iter().filter(|p| p.contains(&z).unwrap_or(false)).count()
                    + usize::from(inner.contains(&z)?);
                exact &= hits == 1;
            }
        }
        report.push(
            "the complement of a box in a box is at most 2d disjoint boxes",
            exact && max_pieces <= 2 * d,
            format!("d={d}: 1000 pairs x 50 points, max pieces {max_pieces}"),
        );
    }
    Ok(())
}

fn random_simplex(n: usize, rng: &mut TestRng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn split_distribution(report: &mut Report, rng: &mut TestRng) -> Result<()> {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let (p, q) = (random_simplex(n, rng), random_simplex(n, rng));
        let s: Vec<usize> = (0..rng.random_range(0..60)).map(|_| rng.random_range(0..n)).collect();
        let map = SplitMap::build(&s, n)?;
        let (ps, qs) = (map.pushforward(&p)?, map.pushforward(&q)?);
        let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        worst = worst.max((l1(&ps, &qs) - l1(&p, &q)).abs());

        let mut prev = f64::INFINITY;
        for cut in 0..=s.len() {
            let norm = SplitMap::build(&s[..cut], n)?.pushforward(&p)?.iter().map(|x| x * x).sum::<f64>();
            monotone &= norm <= prev * (1.0 + 1e-12);
            prev = norm;
        }
    }
    report.push(
        "splitting preserves the l1 distance",
        worst <= 1e-12,
        format!("100 random (p, q, S), max deviation {worst:e}"),
    );
    report.push("adding elements to S never increases ||p_S||_2", monotone, "all prefixes of S".into());

    for m0 in [10.0, 50.0] {
        let p = random_simplex(30, rng);
        let sampler = rand::distr::weighted::WeightedIndex::new(&p).expect("positive weights");
        let trials = 20_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let size = crate::distributions::poisson(m0, rng)?;
            let s: Vec<usize> = (0..size).map(|_| rng.sample(&sampler)).collect();
            total += SplitMap::build(&s, p.len())?.pushforward(&p)?.iter().map(|x| x * x).sum::<f64>();
        }
        let mean = total / trials as f64;
        report.push(
            "E ||p_S||_2^2 <= 1/m0 when |S| ~ Poi(m0)",
            mean <= 1.1 / m0,
            format!("m0={m0}: mean {mean:.5} vs 1/m0 = {:.5}", 1.0 / m0),
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nonsense".parse::<Suite>().is_err());
    }

    #[test]
    fn diamond_parametrization() {
        for i in 0..40 {
            let z = diamond_point(i as f64 / 10.0);
            assert!((z[0].abs() + z[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Covering, Suite::SquareEdge, Suite::DominatingTriple, Suite::CarveComplement] {
            let r = run_suite(s, 1).unwrap();
            assert!(r.passed(), "{r}");
        }
    }
}
