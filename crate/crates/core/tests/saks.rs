use proptest::prelude::*;

use splinelab::maximal::weak_type_ratio_with;
use splinelab::mesh::Rectangle;
use splinelab::remez::remez_constant;
use splinelab::saks::{
    bohr_decompose, build_psi, build_saks_partial, union_measure_check, BohrDecomposition, LocalProjector, Rect, Role,
    SaksSchedule, Q,
};
use splinelab::Error;

fn unit(alpha: f64) -> BohrDecomposition {
    bohr_decompose(&Rectangle::unit(2), alpha).unwrap()
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integrals_agree_with_the_support_pieces(
        alpha in 2.0f64..7.0, x in (0.0f64..1.0, 0.0f64..1.0), y in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let dec = unit(alpha);
        let (x0, x1) = ordered(x.0, x.1);
        let (y0, y1) = ordered(y.0, y.1);
        prop_assume!(x1 > x0 && y1 > y0);
        let r = Rect::new(x0, x1, y0, y1);
        let mut sum = 0.0;
        dec.visit_support(dec.root_f64(), &r, &mut |p: Rect<f64>| sum += p.area() * dec.alpha());
        let descent = dec.integral_over_f64(dec.root_f64(), &r);
        prop_assert!((sum - descent).abs() <= 1e-12, "{} vs {}", sum, descent);
        let exact = dec.integral_over(&Rect::<Q>::from_f64(&r).unwrap());
        prop_assert!((splinelab::saks::Scalar::approx(&exact) - descent).abs() <= 1e-12);
    }

    #[test]
    fn values_are_zero_or_alpha(alpha in 2.0f64..9.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let dec = unit(alpha);
        let v = dec.eval(dec.root_f64(), x, y);
        prop_assert!(v == 0.0 || v == dec.alpha());
    }

    #[test]
    fn every_containing_rectangle_contains_the_point(alpha in 2.0f64..9.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let dec = unit(alpha);
        let found = dec.containing(dec.root_f64(), x, y);
        prop_assert!(!found.is_empty() || dec.eval(dec.root_f64(), x, y) == 0.0);
        for (_, r) in found {
            prop_assert!(r.contains_point(x, y));
        }
    }

    #[test]
    fn partial_sums_have_large_averages(n in 1usize..=3, seed in 0usize..1000) {
        let phi = build_saks_partial(&SaksSchedule::default_levels(3), n).unwrap();
        let level = 1 + seed % n;
        let index = seed % phi.square_count(level);
        let eps = phi.spec(level).epsilon;
        for e in phi.enumeration(level, index).take(40) {
            let avg = phi.integral_over(&e.rect) / e.rect.area();
            prop_assert!(avg * eps >= 1.0 - 1e-12, "{}", avg * eps);
        }
    }
}

#[test]
fn first_generation_for_alpha_five() {
    let dec = unit(5.0);
    assert_eq!(dec.n(), 5);
    assert_eq!(dec.generations(), 6);
    assert_eq!(dec.first_union_area(), Q::new(137.into(), 300.into()));
    assert_eq!(dec.group_count(), 1365u32.into());
    assert_eq!(dec.remainder_count(), 4096u32.into());
}

#[test]
fn materialized_psi_matches_the_implicit_one() {
    let dec = unit(3.0);
    let psi = build_psi(&dec, 100_000).unwrap();
    assert!((psi.integral() - dec.mass_f64()).abs() < 1e-12);
    for i in 0..50 {
        let (x, y) = ((i as f64 * 0.137) % 1.0, (i as f64 * 0.291) % 1.0);
        assert_eq!(psi.eval(&[x, y]), dec.eval(dec.root_f64(), x, y));
    }
    assert!(matches!(build_psi(&unit(20.0), 1000), Err(Error::MeshBlowup { .. })));
    assert!(matches!(bohr_decompose(&Rectangle::unit(2), 1.9), Err(Error::DegenerateAlpha { .. })));
}

fn first_group_level_sets(alpha: f64) -> (Vec<Rect<f64>>, Vec<Vec<Rect<f64>>>) {
    let dec = unit(alpha);
    let lp = LocalProjector::new(2, 2).unwrap();
    let c = remez_constant(2);
    let rects: Vec<Rect<f64>> = dec
        .enumeration_in(dec.root_f64())
        .take_while(|e| e.key.path.is_empty() && matches!(e.key.role, Role::Group(_)))
        .map(|e| e.rect)
        .collect();
    let sets = rects
        .iter()
        .map(|r| {
            let p = lp.project(&dec, r).unwrap();
            p.level_set_rects(p.average() / (c * c), 128)
        })
        .collect();
    (rects, sets)
}

#[test]
fn union_of_level_sets_is_a_stable_fraction() {
    let mut ratios = Vec::new();
    for alpha in [5.0, 10.0, 20.0] {
        let (rects, sets) = first_group_level_sets(alpha);
        assert_eq!(rects.len(), alpha as usize);
        let r = union_measure_check(&rects, &sets).unwrap();
        assert!(r.c >= 0.25, "alpha {alpha}: {r:?}");
        assert!(r.pairs_ok, "alpha {alpha}");
        ratios.push(r.ratio);
    }
    let (lo, hi) = ratios.iter().fold((1.0f64, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo >= 0.25 && hi / lo <= 2.0, "{ratios:?}");
}

#[test]
fn union_check_rejects_sets_outside_their_rectangle() {
    let rects = vec![Rect::new(0.0, 0.5, 0.0, 1.0)];
    let sets = vec![vec![Rect::new(0.4, 0.6, 0.0, 0.5)]];
    assert!(matches!(union_measure_check(&rects, &sets), Err(Error::NotSubset { index: 1 })));
    assert!(matches!(union_measure_check(&rects, &[]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn weak_type_on_psi() {
    for alpha in [2.0, 3.0] {
        let f = build_psi(&unit(alpha), 100_000).unwrap().to_step(1 << 22).unwrap();
        let r = weak_type_ratio_with(&f, &[0.25, 0.5, 1.0], 96, 1).unwrap();
        assert!(r.ratios.iter().all(|v| v.is_finite() && *v > 0.0), "{r:?}");
        // M_S ψ ≥ 1 on all of S: every point lies in a rectangle averaging at least 1
        assert_eq!(r.measured[2], 1.0, "{r:?}");
    }
}
