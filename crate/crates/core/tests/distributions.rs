use ak_closeness::distributions::{rank_transform, LabeledSample, Source};
use ak_closeness::geometry::AxisRectangle;
use ak_closeness::{rng_from_seed, DiscreteGridDistribution};
use proptest::prelude::*;

fn labeled(points: Vec<Vec<f64>>) -> Vec<LabeledSample> {
    points
        .into_iter()
        .enumerate()
        .map(|(i, point)| LabeledSample { point, label: if i % 2 == 0 { Source::P } else { Source::Q } })
        .collect()
}

proptest! {
    #[test]
    fn ranks_are_permutations_preserving_strict_order(
        pts in prop::collection::vec(prop::collection::vec(0u8..6, 2), 1..30),
        seed in any::<u64>(),
    ) {
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
        let set = rank_transform(&labeled(pts.clone()), &mut rng_from_seed(seed)).unwrap();
        let n = pts.len();
        for axis in 0..2 {
            let mut r: Vec<usize> = set.samples().iter().map(|s| s.ranks[axis]).collect();
            for i in 0..n {
                for j in 0..n {
                    if pts[i][axis] < pts[j][axis] {
                        prop_assert!(r[i] < r[j]);
                    }
                }
            }
            r.sort_unstable();
            prop_assert_eq!(r, (1..=n).collect::<Vec<_>>());
        }
        for (s, orig) in set.samples().iter().zip(labeled(pts)) {
            prop_assert_eq!(s.label, orig.label);
        }
    }

    #[test]
    fn embedding_respects_order(
        pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 1), 1..20),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = rng_from_seed(seed);
        let set = rank_transform(&labeled(pts.clone()), &mut rng).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assume!(lo < hi);
        let (zl, zh) = (set.embed(&[lo], &mut rng)[0], set.embed(&[hi], &mut rng)[0]);
        prop_assert!(zl <= zh);
        prop_assert_eq!(zl.fract(), 0.5);
        let below = pts.iter().filter(|p| p[0] < lo).count() as f64;
        prop_assert_eq!(zl, below + 0.5);
    }

    #[test]
    fn mixture_and_box_mass(
        pw in prop::collection::vec((0u8..5, 0u8..5, 0.01f64..1.0), 1..12),
        lo in (0u8..5, 0u8..5),
    ) {
        let pts: Vec<(Vec<f64>, f64)> = pw.iter().map(|&(x, y, w)| (vec![f64::from(x), f64::from(y)], w)).collect();
        let p = DiscreteGridDistribution::from_weighted_points(&pts).unwrap().normalized().unwrap();
        let q = DiscreteGridDistribution::uniform_grid(3, 2).unwrap();
        let mix = p.mixture_half(&q).unwrap();
        prop_assert!((mix.total_mass() - 1.0).abs() < 1e-12);
        let rect = AxisRectangle::new(vec![f64::from(lo.0), f64::from(lo.1)], vec![4.0, 4.0]).unwrap();
        let want = 0.5 * (p.mass_of(&rect).unwrap() + q.mass_of(&rect).unwrap());
        prop_assert!((mix.mass_of(&rect).unwrap() - want).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn mass_is_additive_across_a_cut(
        pw in prop::collection::vec((0u8..5, 0u8..5, 0.01f64..1.0), 1..12),
        axis in 0usize..2,
        cut in 0u8..4,
    ) {
        let pts: Vec<(Vec<f64>, f64)> = pw.iter().map(|&(x, y, w)| (vec![f64::from(x), f64::from(y)], w)).collect();
        let d = DiscreteGridDistribution::from_weighted_points(&pts).unwrap();
        let c = f64::from(cut) + 0.5;
        let whole = AxisRectangle::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap();
        let mut hi_a = vec![4.0, 4.0];
        hi_a[axis] = c;
        let mut lo_b = vec![0.0, 0.0];
        lo_b[axis] = c;
        let a = AxisRectangle::new(vec![0.0, 0.0], hi_a).unwrap();
        let b = AxisRectangle::new(lo_b, vec![4.0, 4.0]).unwrap();
        let sum = d.mass_of(&a).unwrap() + d.mass_of(&b).unwrap();
        prop_assert!((sum - d.mass_of(&whole).unwrap()).abs() < 1e-12);
        prop_assert!((d.mass_of(&whole).unwrap() - d.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn poisson_samples_rank_to_permutations(seed in any::<u64>()) {
        let d = DiscreteGridDistribution::uniform_grid(3, 2).unwrap();
        let mut rng = rng_from_seed(seed);
        let pts = d.sample_poisson(20.0, &mut rng).unwrap();
        prop_assume!(!pts.is_empty());
        let n = pts.len();
        let set = rank_transform(&labeled(pts), &mut rng).unwrap();
        for axis in 0..2 {
            let mut r: Vec<usize> = set.samples().iter().map(|s| s.ranks[axis]).collect();
            r.sort_unstable();
            prop_assert_eq!(r, (1..=n).collect::<Vec<_>>());
        }
    }
}

#[test]
fn weighted_points_accumulate() {
    let d = DiscreteGridDistribution::from_weighted_points(&[(vec![1.0], 0.25), (vec![1.0], 0.25), (vec![2.0], 0.5)]).unwrap();
    assert_eq!(d.mass_at(&[1.0]), 0.5);
    assert!(d.is_normalized());
}

#[test]
fn poisson_sample_size() {
    let d = DiscreteGridDistribution::uniform_grid(4, 2).unwrap();
    let mut rng = rng_from_seed(9);
    let total: usize = (0..2000).map(|_| d.sample_poisson(10.0, &mut rng).unwrap().len()).sum();
    let mean = total as f64 / 2000.0;
    assert!((mean - 10.0).abs() < 0.3, "{mean}");
    assert!(d.sample_poisson(0.0, &mut rng).is_err());
}

#[test]
fn empty_rank_transform_is_an_error() {
    assert!(rank_transform(&[], &mut rng_from_seed(0)).is_err());
}
