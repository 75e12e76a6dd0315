use proptest::prelude::*;
use symann::annindex::{exact_scan, NormOracle, PointSet};
use symann::leveling::{
    level_vector, materialize, rounded, rounded_level_counts, simplify, simplify_counts,
    LevelParams,
};
use symann::netgen::{
    coeffs_from_net_vector, enumerate_rounded_dual_set, frontier_pairing, maximal_seminorm_eval,
    rounded_dual_frontier, EnumerationOptions,
};
use symann::vecnorm::{sorted_abs, top_k_norm, weakly_majorizes, GFunction, NormSpec};

fn catalog(d: usize) -> Vec<NormSpec> {
    vec![
        NormSpec::l1(d),
        NormSpec::l2(d),
        NormSpec::linf(d),
        NormSpec::lp(d, 3.0).unwrap(),
        NormSpec::top_k(d, (d / 2).max(1)).unwrap(),
        NormSpec::k_functional(d, 2.0).unwrap(),
        NormSpec::minimal_sqrt(d),
        NormSpec::maximal(d, symann::vecnorm::sqrt_sequence(d)).unwrap(),
        NormSpec::orlicz(d, GFunction::huber(1.0).unwrap()).unwrap(),
    ]
}

fn vec_pair(max_d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_d).prop_flat_map(|d| {
        (
            prop::collection::vec(-10.0..10.0f64, d),
            prop::collection::vec(-10.0..10.0f64, d),
        )
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn norms_are_symmetric_and_subadditive((x, y) in vec_pair(12), shift in 0usize..12) {
        let d = x.len();
        let mut perm = x.clone();
        perm.rotate_left(shift % d);
        for v in perm.iter_mut().step_by(2) {
            *v = -*v;
        }
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        for n in catalog(d) {
            let nx = n.eval(&x).unwrap();
            prop_assert!(close(nx, n.eval(&perm).unwrap(), 1e-9), "{}", n.label());
            prop_assert!(n.eval(&sum).unwrap() <= (nx + n.eval(&y).unwrap()) * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn majorization_is_monotone(x in prop::collection::vec(-5.0..5.0f64, 2..10), i in 0usize..10, j in 0usize..10, t in 0.0..1.0f64) {
        let d = x.len();
        let (i, j) = (i % d, j % d);
        let mut y: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        // a Robin Hood transfer keeps the sum and flattens the profile
        let (a, b) = (y[i], y[j]);
        y[i] = t * a + (1.0 - t) * b;
        y[j] = (1.0 - t) * a + t * b;
        prop_assert!(weakly_majorizes(&x, &y).unwrap());
        for n in catalog(d) {
            prop_assert!(n.eval(&y).unwrap() <= n.eval(&x).unwrap() * (1.0 + 1e-9) + 1e-12, "{}", n.label());
        }
    }

    #[test]
    fn duality_pairing_is_bounded((x, y) in vec_pair(8)) {
        let d = x.len();
        let inner: f64 = sorted_abs(&x).iter().zip(sorted_abs(&y)).map(|(a, b)| a * b).sum();
        for n in catalog(d) {
            let bound = n.eval(&x).unwrap() * n.dual(&y, 1e-7).unwrap();
            prop_assert!(inner <= bound * (1.0 + 1e-4) + 1e-9, "{}: {inner} > {bound}", n.label());
        }
    }

    #[test]
    fn basis_sandwich(x in prop::collection::vec(-10.0..10.0f64, 1..16)) {
        let d = x.len();
        let s = sorted_abs(&x);
        let l1: f64 = s.iter().sum();
        for n in catalog(d) {
            let e = n.unit_vector_norm();
            let nx = n.eval(&x).unwrap();
            prop_assert!(s[0] * e <= nx * (1.0 + 1e-9) + 1e-12);
            prop_assert!(nx <= l1 * e * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn topk_identity_holds(x in prop::collection::vec(-10.0..10.0f64, 1..20), raw in prop::collection::vec(0.0..5.0f64, 20)) {
        let d = x.len();
        let mut y = raw[..d].to_vec();
        y.sort_by(|a, b| b.total_cmp(a));
        let c = coeffs_from_net_vector(&y).unwrap();
        let lhs: f64 = c.iter().enumerate().map(|(k, ck)| ck * top_k_norm(&x, k + 1).unwrap()).sum();
        let rhs: f64 = sorted_abs(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        prop_assert!(close(lhs, rhs, 1e-9));
        prop_assert!(close(maximal_seminorm_eval(&y, &x).unwrap(), rhs, 1e-9));
    }

    #[test]
    fn rounding_maps_are_idempotent(x in prop::collection::vec(0.0..1.0f64, 2..24)) {
        let d = x.len();
        let p = LevelParams::with_default_tau(1.5, d).unwrap();
        let z = rounded(&x, &p).unwrap();
        prop_assert_eq!(rounded(&z, &p).unwrap(), z.clone());
        prop_assert_eq!(level_vector(&z, &p).unwrap().iter().filter(|v| **v > 0.0).count(),
            z.iter().filter(|v| **v > 0.0).count());
        let s = simplify(&z, &p).unwrap();
        prop_assert_eq!(simplify(&s, &p).unwrap(), s);
        let counts = rounded_level_counts(&x, &p).unwrap();
        let once = simplify_counts(&counts, &p);
        prop_assert_eq!(simplify_counts(&once, &p), once.clone());
        prop_assert_eq!(materialize(&counts, &p), z);
    }

    #[test]
    fn exact_scan_returns_a_nearest_point(rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 1..40), q in prop::collection::vec(-5.0..5.0f64, 4)) {
        let points = PointSet::from_rows(&rows).unwrap();
        let oracle = NormOracle::new(NormSpec::l1(4));
        let rep = exact_scan(&points, &oracle, &q).unwrap();
        let best = rows.iter().map(|r| r.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>()).fold(f64::INFINITY, f64::min);
        prop_assert!(close(rep.distance.unwrap(), best, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frontier_matches_brute_force(x in prop::collection::vec(-3.0..3.0f64, 5), which in 0usize..4) {
        let d = 5;
        let norm = [NormSpec::l1(d), NormSpec::l2(d), NormSpec::top_k(d, 2).unwrap(), NormSpec::minimal_sqrt(d)][which].clone();
        let p = LevelParams::with_default_tau(1.5, d).unwrap();
        let opts = EnumerationOptions::default();
        let set = enumerate_rounded_dual_set(&norm, &p, &opts).unwrap();
        let brute = set.iter().map(|c| maximal_seminorm_eval(&c.vector(&p), &x).unwrap()).fold(0.0, f64::max);
        let rows = rounded_dual_frontier(&norm, &p, &opts).unwrap();
        prop_assert!(close(frontier_pairing(&rows, &sorted_abs(&x)), brute, 1e-9));
    }
}
