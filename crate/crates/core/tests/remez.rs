use proptest::prelude::*;

use splinelab::remez::{check_half_measure, estimate_remez, level_set_measure, remez_constant, Poly1D};
use splinelab::Error;

fn brute_measure(q: &Poly1D, s: f64, samples: usize) -> f64 {
    let (a, b) = q.interval();
    let h = (b - a) / samples as f64;
    (0..samples).filter(|&i| q.eval(a + (i as f64 + 0.5) * h).abs() > s).count() as f64 * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_set_measure_matches_sampling(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..5), a in -1.0f64..1.0, len in 0.1f64..2.0, frac in 0.05f64..0.95,
    ) {
        let q = Poly1D::local(coeffs, a, a + len).unwrap();
        let s = frac * q.sup_norm();
        let exact = level_set_measure(&q, s);
        let sampled = brute_measure(&q, s, 20_000);
        prop_assert!((exact - sampled).abs() <= 2e-3 * len, "{} vs {}", exact, sampled);
        prop_assert!((0.0..=len * (1.0 + 1e-12)).contains(&exact));
    }

    #[test]
    fn half_measure_holds_at_the_sup_norm(coeffs in prop::collection::vec(-1.0f64..1.0, 1..5)) {
        let k = coeffs.len();
        let q = Poly1D::local(coeffs, 0.0, 1.0).unwrap();
        let t = q.sup_norm();
        prop_assume!(t > 1e-9);
        let r = check_half_measure(&q, t, remez_constant(k)).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }
}

#[test]
fn remez_constants_of_low_orders() {
    assert_eq!(estimate_remez(1, 0.5, 100, 1).unwrap().constant, 1.0);
    // extremal linear polynomial: |Q| ≤ 1/3 on half the interval, sup 1
    let c2 = estimate_remez(2, 0.5, 10_000, 1).unwrap().constant;
    assert!((c2 - 3.0).abs() <= 0.06, "{c2}");
    let cs: Vec<f64> = (1..=4).map(remez_constant).collect();
    assert!(cs.windows(2).all(|w| w[1] > w[0]), "{cs:?}");
    assert!(cs[0] > 1.0);
}

#[test]
fn preconditions_are_checked() {
    let q = Poly1D::local(vec![0.0, 1.0], 0.0, 1.0).unwrap();
    assert!(matches!(check_half_measure(&q, 2.0, 3.0), Err(Error::PreconditionViolated(_))));
    assert!(matches!(check_half_measure(&q, 0.5, 1.0), Err(Error::PreconditionViolated(_))));
    assert!(Poly1D::local(vec![1.0], 1.0, 1.0).is_err());
}
