use ak_closeness::covering::{CoverFamily, InducedOutcome, SamplePointGrid};
use ak_closeness::geometry::{AxisRectangle, PointSet};
use ak_closeness::{rng_from_seed, DiscreteGridDistribution};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn grid(m: usize, d: usize, seed: u64) -> (SamplePointGrid, CoverFamily) {
    let mut rng = rng_from_seed(seed);
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let mut c: Vec<f64> = (0..=m).map(|v| v as f64 * 0.5 + 1.0).collect();
            c.shuffle(&mut rng);
            c
        })
        .collect();
    let pts = (0..=m).map(|i| cols.iter_mut().map(|c| c[i]).collect()).collect();
    let g = SamplePointGrid::build(&PointSet::new(pts).unwrap()).unwrap();
    let f = CoverFamily::build(&g);
    (g, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_point_in_span_has_log_d_containers(
        log_m in 1u32..=5,
        d in 1usize..=3,
        seed in any::<u64>(),
        u in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let m = 1usize << log_m;
        let (g, f) = grid(m, d, seed);
        let vals = g.axis_values();
        let z: Vec<f64> = (0..d).map(|a| vals[a][0] + u[a] * (vals[a][m] - vals[a][0])).collect();
        let keys = f.containing(&z).unwrap().unwrap();
        prop_assert_eq!(keys.len(), (log_m as usize).pow(d as u32));
        for k in &keys {
            prop_assert!(f.contains(*k, &z));
            prop_assert!(f.rect_bounds(*k).contains(&z).unwrap());
        }
    }

    #[test]
    fn grid_rect_decomposition_is_exact(
        log_m in 1u32..=4,
        d in 1usize..=3,
        seed in any::<u64>(),
        bounds in prop::collection::vec((0usize..16, 0usize..16), 3),
        probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 30),
    ) {
        let m = 1usize << log_m;
        let (g, f) = grid(m, d, seed);
        let vals = g.axis_values();
        let (lo, hi): (Vec<usize>, Vec<usize>) = bounds[..d]
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a % (m + 1), b % (m + 1));
                if a == b { (a.min(m - 1), a.min(m - 1) + 1) } else { (a.min(b), a.max(b)) }
            })
            .unzip();
        let rect = AxisRectangle::new(
            lo.iter().enumerate().map(|(a, &i)| vals[a][i]).collect(),
            hi.iter().enumerate().map(|(a, &i)| vals[a][i]).collect(),
        ).unwrap();
        let pieces = f.decompose_grid_rect(&rect).unwrap();
        prop_assert!(pieces.len() <= (2 * log_m as usize).pow(d as u32));
        for u in probes {
            let z: Vec<f64> = (0..d).map(|a| vals[a][0] + u[a] * (vals[a][m] - vals[a][0])).collect();
            let inside = (0..d).all(|a| vals[a][lo[a]] <= z[a] && z[a] < vals[a][hi[a]]);
            let hits = pieces.iter().filter(|&&k| f.contains(k, &z)).count();
            prop_assert_eq!(hits, usize::from(inside));
        }
    }
}

#[test]
fn induced_distribution_preserves_mass() {
    let (g, f) = grid(8, 2, 3);
    let vals = g.axis_values();
    let pts: Vec<(Vec<f64>, f64)> = (0..8)
        .map(|i| (vec![vals[0][i] + 0.1, vals[1][(i * 3) % 8] + 0.1], 0.1))
        .chain([(vec![100.0, 100.0], 0.2)])
        .collect();
    let dist = DiscreteGridDistribution::from_weighted_points(&pts).unwrap();
    let induced = f.induced_distribution(&dist).unwrap();
    let total: f64 = induced.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!((induced[&InducedOutcome::Empty] - 0.2).abs() < 1e-12);
    for (outcome, w) in &induced {
        if let InducedOutcome::Rect(key) = outcome {
            let direct = f.region_mass(&dist, *key);
            assert!((w * f.multiplicity() as f64 - direct).abs() < 1e-12, "{w} vs {direct}");
        }
    }
}

#[test]
fn induced_outcome_frequencies_match_exact_measure() {
    let (g, f) = grid(4, 1, 5);
    let z = vec![g.axis_values()[0][1] + 0.01];
    let mut rng = rng_from_seed(6);
    let n = 30_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..n {
        *counts.entry(f.induced_outcome(&z, &mut rng)).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 2);
    for c in counts.values() {
        assert!((*c as f64 / n as f64 - 0.5).abs() < 0.02);
    }
}

/// Upper 0.999 quantile of chi-squared with `df` degrees of freedom
/// (Wilson-Hilferty).
fn chi2_critical(df: f64) -> f64 {
    let z = 3.090_232;
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + z * a.sqrt()).powi(3)
}

#[test]
fn sampled_outcomes_fit_the_exact_induced_measure() {
    let (g, f) = grid(4, 2, 8);
    let vals = g.axis_values();
    let pts = vec![
        (vec![vals[0][0] + 0.1, vals[1][2] + 0.1], 0.5),
        (vec![vals[0][3] + 0.1, vals[1][1] + 0.1], 0.3),
        (vec![vals[0][4] + 1.0, vals[1][0]], 0.2),
    ];
    let dist = DiscreteGridDistribution::from_weighted_points(&pts).unwrap();
    let exact = f.induced_distribution(&dist).unwrap();
    let sampler = dist.sampler().unwrap();
    let mut rng = rng_from_seed(10);
    let n = 10_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..n {
        let z = sampler.sample(&mut rng);
        *counts.entry(f.induced_outcome(&z, &mut rng)).or_insert(0usize) += 1;
    }
    assert!(counts.keys().all(|k| exact.contains_key(k)));
    let chi2: f64 = exact
        .iter()
        .map(|(k, &w)| {
            let e = w * n as f64;
            let o = *counts.get(k).unwrap_or(&0) as f64;
            (o - e) * (o - e) / e
        })
        .sum();
    let df = exact.len() as f64 - 1.0;
    assert!(chi2 < chi2_critical(df), "chi2 = {chi2}, df = {df}");
}

#[test]
fn grid_requires_power_of_two_plus_one() {
    let pts = PointSet::new((0..6).map(|i| vec![i as f64]).collect()).unwrap();
    assert!(SamplePointGrid::build(&pts).is_err());
    let tied = PointSet::new(vec![vec![1.0], vec![1.0], vec![2.0]]).and_then(|s| SamplePointGrid::build(&s));
    assert!(tied.is_err());
}
