use nalgebra::DMatrix;
use proptest::prelude::*;

use kcurv::geometry::shape_eigenvalues;
use kcurv::grid::{Resolution, ScalarField, SphereGrid};
use kcurv::prescription::{
    HomotopyPrescription, ModelPrescription, Prescription, ReferencePrescription,
};
use kcurv::symmetric::{elementary_symmetric, grad_f, in_gamma_k, mean, normalized_root, EigenTuple};

fn tuple(v: &[f64]) -> EigenTuple {
    EigenTuple::new(v.to_vec()).unwrap()
}

fn member(v: &[f64], k: usize) -> bool {
    in_gamma_k(&tuple(v), k).unwrap().member
}

fn cone_point(n: usize, k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..3.0f64, n).prop_filter("outside the cone", move |v| member(v, k))
}

fn n_k() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), 1..=n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn root_is_one_homogeneous((n, k) in n_k(), raw in prop::collection::vec(-2.0..3.0f64, 4), s in 0.1..10.0f64) {
        let v = &raw[..n];
        prop_assume!(member(v, k));
        let f = normalized_root(&tuple(v), k).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| s * x).collect();
        let fs = normalized_root(&tuple(&scaled), k).unwrap();
        prop_assert!((fs - s * f).abs() <= 1e-12 * fs.abs().max(1.0));
    }

    #[test]
    fn euler_and_positive_gradient((n, k) in n_k(), raw in prop::collection::vec(-2.0..3.0f64, 4)) {
        let v = &raw[..n];
        prop_assume!(member(v, k));
        let f = normalized_root(&tuple(v), k).unwrap();
        let g = grad_f(&tuple(v), k).unwrap();
        let dot: f64 = g.values().iter().zip(v).map(|(a, b)| a * b).sum();
        prop_assert!((dot - f).abs() <= 1e-10 * f);
        prop_assert!(g.values().iter().all(|x| *x > 0.0));
    }

    #[test]
    fn concave_on_segments(a in cone_point(3, 2), b in cone_point(3, 2), s in 0.0..1.0f64) {
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + (1.0 - s) * y).collect();
        prop_assert!(member(&m, 2));
        let f = |v: &[f64]| normalized_root(&tuple(v), 2).unwrap();
        prop_assert!(f(&m) >= s * f(&a) + (1.0 - s) * f(&b) - 1e-12);
    }

    #[test]
    fn maclaurin_chain(a in cone_point(3, 2)) {
        let t = tuple(&a);
        let f = normalized_root(&t, 2).unwrap();
        let g = grad_f(&t, 2).unwrap();
        let s2: f64 = g.values().iter().zip(&a).map(|(x, y)| x * y * y).sum();
        let h1 = mean(&t);
        prop_assert!(s2 - f * h1 >= -1e-10);
        prop_assert!(f * h1 - f * f >= -1e-10);
    }

    #[test]
    fn cones_are_nested_and_closed_under_positive_shifts(
        a in prop::collection::vec(-2.0..3.0f64, 3),
        shift in prop::collection::vec(0.0..2.0f64, 3),
    ) {
        for k in 1..=3 {
            if member(&a, k) {
                for j in 1..k {
                    prop_assert!(member(&a, j));
                }
                let b: Vec<f64> = a.iter().zip(&shift).map(|(x, y)| x + y).collect();
                prop_assert!(member(&b, k));
                let before = elementary_symmetric(&tuple(&a), k).unwrap();
                let after = elementary_symmetric(&tuple(&b), k).unwrap();
                prop_assert!(after >= before - 1e-12);
            }
        }
    }

    #[test]
    fn shape_eigenvalues_solve_the_pencil(
        l in prop::collection::vec(-1.0..1.0f64, 9),
        a in prop::collection::vec(-2.0..2.0f64, 9),
        n in 2usize..=3,
    ) {
        let lower = DMatrix::from_fn(n, n, |i, j| if i > j { l[3 * i + j] } else if i == j { 1.0 + l[3 * i + j].abs() } else { 0.0 });
        let g = &lower * lower.transpose();
        let a = DMatrix::from_fn(n, n, |i, j| a[3 * i.max(j) + i.min(j)]);
        let eigs = shape_eigenvalues(&a, &g).unwrap();
        let m = g.clone().try_inverse().unwrap() * &a;
        let trace: f64 = eigs.values().iter().sum();
        prop_assert!((trace - m.trace()).abs() <= 1e-9 * (1.0 + m.trace().abs()));
        if n == 2 {
            let (tr, det) = (m.trace(), m.determinant());
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            let want = [(tr - disc) / 2.0, (tr + disc) / 2.0];
            for (x, y) in eigs.values().iter().zip(want) {
                prop_assert!((x - y).abs() <= 1e-8 * (1.0 + y.abs()));
            }
        }
        for lam in eigs.values() {
            let pencil = &a - &g * *lam;
            let scale = a.norm() + g.norm() * lam.abs();
            prop_assert!(pencil.determinant().abs() <= 1e-9 * scale.powi(n as i32));
        }
    }

    #[test]
    fn homotopy_is_affine_in_t(t in 0.0..=1.0f64, r in 0.1..2.0f64, tau in 1.0..5.0f64, phi in 0.1..3.0f64) {
        let target = ModelPrescription::new(0.5, 0.1, 2.0).unwrap();
        let reference = ReferencePrescription { power: 2.0 };
        let xi = kcurv::grid::SpherePoint::Sphere { colat: phi, lon: 0.3 };
        let h = HomotopyPrescription::new(&target, 2.0, t).unwrap().eval(&xi, r, tau).unwrap();
        let a = target.eval(r, &xi, tau);
        let b = reference.eval(r, &xi, tau);
        prop_assert!((h.value - (t * a.value + (1.0 - t) * b.value)).abs() <= 1e-12 * (1.0 + a.value.abs() + b.value.abs()));
        prop_assert!((h.d_tau - (t * a.d_tau + (1.0 - t) * b.d_tau)).abs() <= 1e-12 * (1.0 + a.d_tau.abs() + b.d_tau.abs()));
    }

    #[test]
    fn grid_operators_are_linear(alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
        let grid = SphereGrid::new(Resolution::Sphere { nlat: 8, nlon: 16 }).unwrap();
        let f = ScalarField::from_fn(&grid, |p| p.embedding()[0]);
        let g = ScalarField::from_fn(&grid, |p| p.embedding()[1] * p.embedding()[2]);
        let combo = ScalarField::new(f.values().iter().zip(g.values()).map(|(a, b)| alpha * a + beta * b).collect());
        let (hf, hg, hc) = (
            grid.covariant_hessian(&f).unwrap(),
            grid.covariant_hessian(&g).unwrap(),
            grid.covariant_hessian(&combo).unwrap(),
        );
        for node in 0..grid.len() {
            for i in 0..2 {
                for j in 0..2 {
                    let want = alpha * hf.values[node][i][j] + beta * hg.values[node][i][j];
                    prop_assert!((hc.values[node][i][j] - want).abs() <= 1e-9 * (1.0 + want.abs()));
                }
            }
        }
    }
}
