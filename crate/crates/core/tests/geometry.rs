use ak_closeness::geometry::{erdos_szekeres_threshold, find_dominating_triple, AxisRectangle, PointSet};
use proptest::prelude::*;

fn boxes(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let axis = (0.0f64..1.0, 0.01f64..1.0, 0.0f64..1.0, 0.0f64..1.0);
    prop::collection::vec(axis, d).prop_map(|axes| {
        let mut out = (vec![], vec![], vec![], vec![]);
        for (lo, len, u, v) in axes {
            let hi = lo + len;
            let (a, b) = (lo + u * len, lo + v * len);
            out.0.push(lo);
            out.1.push(hi);
            out.2.push(a.min(b));
            out.3.push(a.max(b));
        }
        out
    })
}

proptest! {
    #[test]
    fn complement_partitions_outer(
        (olo, ohi, ilo, ihi) in (1usize..=4).prop_flat_map(boxes),
        probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 40),
    ) {
        let d = olo.len();
        let outer = AxisRectangle::new(olo.clone(), ohi.clone()).unwrap();
        let inner = AxisRectangle::new(ilo, ihi).unwrap();
        let pieces = outer.decompose_complement(&inner).unwrap();
        prop_assert!(pieces.len() <= 2 * d);
        for p in &pieces {
            prop_assert!(outer.contains_rect(p).unwrap());
            prop_assert!(!p.interiors_overlap(&inner));
        }
        for (i, a) in pieces.iter().enumerate() {
            for b in &pieces[i + 1..] {
                prop_assert!(!a.interiors_overlap(b));
            }
        }
        let vol: f64 = pieces.iter().map(AxisRectangle::volume).sum::<f64>() + inner.volume();
        prop_assert!((vol - outer.volume()).abs() <= 1e-12 * outer.volume().max(1e-300));
        for u in probes {
            let z: Vec<f64> = (0..d).map(|a| olo[a] + u[a] * (ohi[a] - olo[a])).collect();
            let hits = pieces.iter().filter(|p| p.contains(&z).unwrap()).count();
            prop_assert_eq!(hits + usize::from(inner.contains(&z).unwrap()), 1);
        }
    }

    #[test]
    fn hull_contains_its_points(pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..10)) {
        let hull = AxisRectangle::hull(&pts).unwrap();
        for p in &pts {
            prop_assert!(hull.contains(p).unwrap());
        }
    }

    #[test]
    fn spanned_box_holds_both_points(
        x in prop::collection::vec(-5.0f64..5.0, 1..4),
        seed in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let y: Vec<f64> = seed[..x.len()].to_vec();
        let r = AxisRectangle::from_points(&x, &y).unwrap();
        prop_assert!(r.contains(&x).unwrap() && r.contains(&y).unwrap());
        prop_assert_eq!(r, AxisRectangle::from_points(&y, &x).unwrap());
    }

    #[test]
    fn overlap_is_symmetric((alo, ahi, blo, bhi) in (1usize..=3).prop_flat_map(boxes)) {
        let a = AxisRectangle::new(alo, ahi).unwrap();
        let b = AxisRectangle::new(blo, bhi).unwrap();
        prop_assert_eq!(a.interiors_overlap(&b), b.interiors_overlap(&a));
    }

    #[test]
    fn large_generic_sets_have_a_dominating_triple(
        d in 1usize..=2,
        seed_pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 5..9),
    ) {
        let pts: Vec<Vec<f64>> = seed_pts.into_iter().map(|p| p[..d].to_vec()).collect();
        let set = PointSet::new(pts).unwrap();
        prop_assume!(set.is_generic());
        let t = find_dominating_triple(&set).unwrap().expect("at least 2^(2^(d-1)) + 1 points");
        for a in 0..d {
            prop_assert!(t.x[a].min(t.y[a]) <= t.z[a] && t.z[a] <= t.x[a].max(t.y[a]));
        }
    }
}

#[test]
fn threshold_values() {
    assert_eq!(erdos_szekeres_threshold(3, 1).unwrap(), 5);
    assert_eq!(erdos_szekeres_threshold(3, 2).unwrap(), 17);
    assert_eq!(erdos_szekeres_threshold(2, 3).unwrap(), 2);
    assert!(erdos_szekeres_threshold(3, 7).is_err());
    assert!(erdos_szekeres_threshold(1, 1).is_err());
}

#[test]
fn inner_not_contained_is_rejected() {
    let outer = AxisRectangle::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let inner = AxisRectangle::new(vec![0.5, 0.5], vec![1.5, 0.7]).unwrap();
    assert!(outer.decompose_complement(&inner).is_err());
    assert_eq!(outer.decompose_complement(&outer).unwrap().len(), 0);
}
