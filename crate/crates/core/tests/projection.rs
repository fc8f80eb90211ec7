use proptest::prelude::*;

use splinelab::bspline::TensorCoeffs;
use splinelab::maximal::{domination_ratio, strong_maximal, weak_type_ratio_with};
use splinelab::mesh::{generate_mesh, KnotVector, MeshKind, Rectangle, TensorMesh};
use splinelab::projection::{
    dirichlet_kernel, lebesgue_constant, named_field, sample_points, FnField, Projector, QuadratureSpec,
};
use splinelab::step::StepFunction;

fn axis(k: usize, n: usize, seed: u64) -> KnotVector {
    generate_mesh(MeshKind::Random, n.max(k), k, 0.0, seed).unwrap()
}

fn mesh2(k: (usize, usize), n: (usize, usize), seed: u64) -> TensorMesh {
    TensorMesh::new(vec![axis(k.0, n.0, seed), axis(k.1, n.1, seed ^ 0x55)]).unwrap()
}

fn project(mesh: &TensorMesh, f: &dyn splinelab::projection::ScalarField) -> TensorCoeffs {
    Projector::new(mesh.clone()).project(f, QuadratureSpec::for_mesh(mesh)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polynomials_of_the_spline_order_are_reproduced(
        k in (1usize..=4, 1usize..=4), n in (4usize..12, 4usize..12), seed in any::<u64>(),
        c in prop::array::uniform4(-2.0f64..2.0), x in (0.0f64..=1.0, 0.0f64..=1.0),
    ) {
        let mesh = mesh2(k, n, seed);
        let (p, q) = (k.0 as i32 - 1, k.1 as i32 - 1);
        let poly = move |x: &[f64]| c[0] + c[1] * x[0].powi(p) + c[2] * x[1].powi(q) + c[3] * x[0].powi(p) * x[1].powi(q);
        let f = FnField::new(2, poly);
        let s = project(&mesh, &f);
        let v = s.eval(&[x.0, x.1]).unwrap();
        prop_assert!((v - poly(&[x.0, x.1])).abs() <= 1e-9, "{} vs {}", v, poly(&[x.0, x.1]));
    }

    #[test]
    fn projection_is_idempotent(k in (1usize..=3, 1usize..=3), n in (3usize..9, 3usize..9), seed in any::<u64>()) {
        let mesh = mesh2(k, n, seed);
        let f = named_field("runge", 2).unwrap();
        let once = project(&mesh, &f);
        let s = once.clone();
        let g = FnField::new(2, move |x: &[f64]| s.eval(x).unwrap());
        let twice = project(&mesh, &g);
        for (a, b) in once.coeffs().iter().zip(twice.coeffs().iter()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn step_function_moments_are_orthogonal_to_the_residual(
        k in 1usize..=3, n in 3usize..10, seed in any::<u64>(), cells in 1usize..6,
    ) {
        // ∫ (f - Pf) N_i = 0 for every basis function
        let kv = axis(k, n, seed);
        let mesh = TensorMesh::from(kv.clone());
        let f = StepFunction::random(1, cells, -1.0, 2.0, seed).unwrap();
        let p = Projector::new(mesh.clone());
        let s = p.project(&f, QuadratureSpec::for_mesh(&mesh)).unwrap();
        let mf = p.moments(&f, QuadratureSpec::for_mesh(&mesh)).unwrap();
        let sf = FnField::new(1, move |x: &[f64]| s.eval(x).unwrap());
        let ms = p.moments(&sf, QuadratureSpec::for_mesh(&mesh)).unwrap();
        for (a, b) in mf.iter().zip(ms.iter()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn kernel_is_symmetric(k in 1usize..=3, n in 3usize..12, seed in any::<u64>(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let mesh = TensorMesh::from(axis(k, n, seed));
        let a = dirichlet_kernel(&mesh, &[x], &[y]).unwrap();
        let b = dirichlet_kernel(&mesh, &[y], &[x]).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn lebesgue_constant_is_at_least_one(k in 1usize..=4, n in 4usize..30, seed in any::<u64>()) {
        let l = lebesgue_constant(&TensorMesh::from(axis(k, n, seed)), 6).unwrap().lambda;
        prop_assert!(l >= 1.0 - 1e-10);
        if k == 1 {
            prop_assert!((l - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn maximal_function_dominates_the_function(seed in any::<u64>(), cells in 1usize..5, x in (0.0f64..=1.0, 0.0f64..=1.0)) {
        let f = StepFunction::random(2, cells, -3.0, 3.0, seed).unwrap();
        let m = strong_maximal(&f, &[x.0, x.1]).unwrap();
        prop_assert!(m + 1e-12 >= f.eval(&[x.0, x.1]).unwrap().abs());
        let max = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(m <= max + 1e-12);
    }

    #[test]
    fn cell_averages_are_dominated_exactly(seed in any::<u64>(), n in (2usize..8, 2usize..8)) {
        let mesh = mesh2((1, 1), n, seed);
        let f = StepFunction::random(2, 4, -2.0, 2.0, seed).unwrap();
        let r = domination_ratio(&Projector::new(mesh), &f, &sample_points(2, 40, seed)).unwrap();
        prop_assert!(r.max_ratio <= 1.0 + 1e-10);
    }
}

#[test]
fn maximal_function_of_an_indicator() {
    // 1_[0,1/2] at x = 3/4: best interval [0, 3/4] averages 2/3
    let f = StepFunction::indicator(&Rectangle::from_bounds(&[0.0], &[0.5]).unwrap(), 1.0);
    let m = strong_maximal(&f, &[0.75]).unwrap();
    assert!((m - 2.0 / 3.0).abs() < 1e-12, "{m}");
    // in 2-D the square [0,1/2]² seen from (3/4, 3/4) through [0,3/4]²
    let f = StepFunction::indicator(&Rectangle::from_bounds(&[0.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
    let m = strong_maximal(&f, &[0.75, 0.25]).unwrap();
    assert!((m - 2.0 / 3.0).abs() < 1e-12, "{m}");
}

#[test]
fn weak_type_ratios_are_finite_and_reproducible() {
    let f = StepFunction::random(2, 4, 0.0, 4.0, 9).unwrap();
    let a = weak_type_ratio_with(&f, &[0.5, 1.0, 2.0], 48, 1).unwrap();
    let b = weak_type_ratio_with(&f, &[0.5, 1.0, 2.0], 48, 1).unwrap();
    assert_eq!(a, b);
    assert!(a.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    assert!(a.measured.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn lebesgue_constant_factorizes() {
    let a = axis(2, 12, 1);
    let b = axis(3, 9, 2);
    let la = lebesgue_constant(&TensorMesh::from(a.clone()), 8).unwrap().lambda;
    let lb = lebesgue_constant(&TensorMesh::from(b.clone()), 8).unwrap().lambda;
    let l = lebesgue_constant(&TensorMesh::new(vec![a, b]).unwrap(), 8).unwrap();
    assert!((l.lambda - la * lb).abs() <= 1e-8);
    assert_eq!(l.per_axis.len(), 2);
}
