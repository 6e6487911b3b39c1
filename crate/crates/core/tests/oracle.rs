use ak_closeness::geometry::AxisRectangle;
use ak_closeness::oracle::{
    ak_distance_1d, ak_distance_bruteforce, constant_mass_bound, density_from_masses, random_pair_discrepancy,
};
use ak_closeness::{rng_from_seed, DiscreteGridDistribution, Mode, TesterConfig};
use rand::Rng;
use proptest::prelude::*;

/// Masses are multiples of 1/16, so every partial sum is exact.
fn dyadic(points: Vec<(Vec<f64>, u8)>) -> DiscreteGridDistribution {
    let pts: Vec<(Vec<f64>, f64)> = points.into_iter().map(|(x, w)| (x, f64::from(w) / 16.0)).collect();
    DiscreteGridDistribution::from_weighted_points(&pts).unwrap()
}

fn support(d: usize) -> impl Strategy<Value = Vec<(Vec<f64>, u8)>> {
    prop::collection::vec((prop::collection::vec(0u8..5, d), 1u8..6), 1..5)
        .prop_map(|v| v.into_iter().map(|(x, w)| (x.into_iter().map(f64::from).collect(), w)).collect())
}

fn l1(p: &DiscreteGridDistribution, q: &DiscreteGridDistribution) -> f64 {
    let mut pts: Vec<Vec<f64>> = p.support().into_iter().chain(q.support()).map(|(x, _)| x).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts.iter().map(|x| (p.mass_at(x) - q.mass_at(x)).abs()).sum()
}

/// Best sum of `|delta|` over at most `k` disjoint runs of consecutive
/// entries, by enumerating every run layout.
fn runs_enumeration(delta: &[f64], k: usize) -> f64 {
    fn go(delta: &[f64], start: usize, left: usize) -> f64 {
        if left == 0 || start >= delta.len() {
            return 0.0;
        }
        let mut best = 0.0f64;
        for a in start..delta.len() {
            for b in a + 1..=delta.len() {
                let v = delta[a..b].iter().sum::<f64>().abs();
                best = best.max(v + go(delta, b, left - 1));
            }
        }
        best
    }
    go(delta, 0, k)
}

proptest! {
    #[test]
    fn one_dim_dp_matches_enumeration_and_brute_force(p in support(1), q in support(1), k in 1usize..=4) {
        let (p, q) = (dyadic(p), dyadic(q));
        let mut xs: Vec<f64> = p.support().into_iter().chain(q.support()).map(|(x, _)| x[0]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let delta: Vec<f64> = xs.iter().map(|&x| p.mass_at(&[x]) - q.mass_at(&[x])).collect();
        let dp = ak_distance_1d(&p, &q, k).unwrap();
        prop_assert_eq!(dp, runs_enumeration(&delta, k));
        prop_assert_eq!(dp, ak_distance_bruteforce(&p, &q, k).unwrap().0);
    }

    #[test]
    fn brute_force_bounds(p in support(2), q in support(2)) {
        let (p, q) = (dyadic(p), dyadic(q));
        let dist = l1(&p, &q);
        let mut prev = 0.0;
        for k in 1..=4 {
            let (v, family) = ak_distance_bruteforce(&p, &q, k).unwrap();
            prop_assert!(v >= prev);
            prop_assert!(v <= dist);
            prop_assert!(family.rects.len() <= k);
            prop_assert!(family.disjoint);
            let witnessed: f64 = family
                .rects
                .iter()
                .map(|r| (p.mass_of(r).unwrap() - q.mass_of(r).unwrap()).abs())
                .sum();
            prop_assert_eq!(witnessed, v);
            prev = v;
        }
    }

    #[test]
    fn enough_boxes_give_l1(p in support(2), q in support(2)) {
        let (p, q) = (dyadic(p), dyadic(q));
        let mut pts: Vec<Vec<f64>> = p.support().into_iter().chain(q.support()).map(|(x, _)| x).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        prop_assume!(pts.len() <= 4);
        prop_assert_eq!(ak_distance_bruteforce(&p, &q, 4).unwrap().0, l1(&p, &q));
    }
}

#[test]
fn caps_are_enforced() {
    let p = DiscreteGridDistribution::uniform_grid(13, 1).unwrap();
    let q = DiscreteGridDistribution::uniform_grid(2, 1).unwrap();
    assert!(ak_distance_bruteforce(&p, &q, 2).is_err());
    assert!(ak_distance_bruteforce(&q, &q, 5).is_err());
    assert!(ak_distance_bruteforce(&q, &q, 0).is_err());
    assert!(ak_distance_1d(&p, &q, 3).is_ok());
}

#[test]
fn small_constants() {
    assert_eq!(constant_mass_bound(1).unwrap(), 1.0 / 27.0);
    assert_eq!(constant_mass_bound(2).unwrap(), 1.0 / 125.0);
    assert_eq!(constant_mass_bound(3).unwrap(), 1.0 / 4913.0);
    assert_eq!(density_from_masses(0.75, 0.25).unwrap(), 1.0);
    assert!(density_from_masses(0.0, 0.0).is_err());
}

/// Random small pair with distinct coordinates, and the hull of its support.
fn random_pair(d: usize, rng: &mut impl Rng) -> (DiscreteGridDistribution, DiscreteGridDistribution, AxisRectangle) {
    let n = rng.random_range(2..=6);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let weights = |rng: &mut dyn rand::RngCore| -> Vec<(Vec<f64>, f64)> {
        pts.iter()
            .map(|x| (x.clone(), if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }))
            .collect()
    };
    let (mut wp, mut wq) = (weights(rng), weights(rng));
    wp[0].1 += 0.1;
    wq[1].1 += 0.1;
    let p = DiscreteGridDistribution::from_weighted_points(&wp).unwrap().normalized().unwrap();
    let q = DiscreteGridDistribution::from_weighted_points(&wq).unwrap().normalized().unwrap();
    (p, q, AxisRectangle::hull(&pts).unwrap())
}

#[test]
fn random_pair_discrepancy_bound_in_paper_mode() {
    let mut rng = rng_from_seed(21);
    let (mut checked, mut practical_ok) = (0, 0);
    while checked < 200 {
        let d = rng.random_range(1..=2);
        let (p, q, r) = random_pair(d, &mut rng);
        let (pr, qr) = (p.mass_of(&r).unwrap(), q.mass_of(&r).unwrap());
        // The hypothesis |p(R) - q(R)| >= eps (p(R) + q(R)).
        let eps = (pr - qr).abs() / (pr + qr);
        if !(eps > 0.0 && eps <= 0.5) {
            continue;
        }
        checked += 1;
        let lhs = random_pair_discrepancy(&p, &q, &r).unwrap();
        let alpha = TesterConfig::new(4, d, 1.0, Mode::Paper, 0).unwrap().alpha();
        assert!(lhs >= eps.powf(alpha) * (pr + qr), "d={d} eps={eps} lhs={lhs}");
        let alpha_eff = TesterConfig::new(4, d, 1.0, Mode::Practical, 0).unwrap().alpha();
        practical_ok += usize::from(lhs >= eps.powf(alpha_eff) * (pr + qr));
    }
    println!("practical exponent satisfied on {practical_ok}/{checked} instances");
}

#[test]
fn random_pair_discrepancy_at_full_density() {
    let p = DiscreteGridDistribution::from_weighted_points(&[(vec![0.0], 0.5), (vec![1.0], 0.5)]).unwrap();
    let q = DiscreteGridDistribution::from_weighted_points(&[(vec![5.0], 1.0)]).unwrap();
    let r = AxisRectangle::new(vec![0.0], vec![1.0]).unwrap();
    assert_eq!(random_pair_discrepancy(&p, &q, &r).unwrap(), 0.75);
}
