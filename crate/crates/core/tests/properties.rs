use cartan_core::catalog;
use cartan_core::groupoid::{self, Arrow, ArrowTangent, GaugeGroupoid, GroupoidRep};
use cartan_core::liegroups::{general_linear, lorentz_so21, special_euclidean, special_orthogonal, GroupRef};
use cartan_core::numkit::{self, Mat, Tolerances, Vector};
use proptest::prelude::*;

fn coords(dim: usize, r: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-r..r, dim).prop_map(Vector::from_vec)
}

fn groups() -> Vec<GroupRef> {
    vec![
        special_orthogonal(3).unwrap(),
        general_linear(2).unwrap(),
        lorentz_so21().unwrap(),
        special_euclidean(2).unwrap().0,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_identity(which in 0usize..4, seed in coords(18, 1.0)) {
        let g = &groups()[which];
        let k = g.dim();
        let (x, y, z) = (seed.rows(0, k).into_owned(), seed.rows(6, k).into_owned(), seed.rows(12, k).into_owned());
        let br = |a: &Vector, b: &Vector| g.bracket_coords(a, b);
        let sum = br(&x, &br(&y, &z)) + br(&y, &br(&z, &x)) + br(&z, &br(&x, &y));
        prop_assert!(sum.amax() < 1e-12);
    }

    #[test]
    fn adjoint_is_a_homomorphism(which in 0usize..4, a in coords(6, 1.0), b in coords(6, 1.0), x in coords(6, 1.0), y in coords(6, 1.0)) {
        let g = &groups()[which];
        let k = g.dim();
        let (a, b) = (a.rows(0, k).into_owned(), b.rows(0, k).into_owned());
        let (x, y) = (x.rows(0, k).into_owned(), y.rows(0, k).into_owned());
        let (ga, gb) = (g.exp_coords(&a).unwrap(), g.exp_coords(&b).unwrap());
        let ad_ab = g.adjoint_matrix(&(&ga * &gb)).unwrap();
        let ad_a = g.adjoint_matrix(&ga).unwrap();
        let prod = &ad_a * g.adjoint_matrix(&gb).unwrap();
        prop_assert!((ad_ab - prod).amax() < 1e-8);
        let lhs = &ad_a * g.bracket_coords(&x, &y);
        let rhs = g.bracket_coords(&(&ad_a * &x), &(&ad_a * &y));
        prop_assert!((lhs - rhs).amax() < 1e-8);
    }

    #[test]
    fn exp_log_roundtrip(x in coords(3, 1.5)) {
        let g = special_orthogonal(3).unwrap();
        let m = g.matrix_of(&x);
        let back = numkit::matrix_log(&numkit::matrix_exp(&m).unwrap()).unwrap();
        prop_assert!((back - m).amax() < 1e-9);
    }

    #[test]
    fn rank_nullity(rows in 1usize..6, cols in 1usize..6, rank in 0usize..6, entries in coords(72, 1.0)) {
        let r = rank.min(rows).min(cols);
        let left = Mat::from_fn(rows, r, |i, j| entries[i * 6 + j]);
        let right = Mat::from_fn(r, cols, |i, j| entries[36 + i * 6 + j]);
        let m = left * right;
        let tol = Tolerances::default();
        let (rk, ker) = numkit::rank_nullspace(&m, &tol).unwrap();
        prop_assert_eq!(rk + ker.dim(), cols);
        prop_assert!(rk <= r);
        prop_assert!((&m * &ker.basis).amax() < 1e-9);
    }

    #[test]
    fn projectors_are_orthogonal_idempotents(cols in 1usize..4, entries in coords(20, 1.0)) {
        let m = Mat::from_fn(5, cols, |i, j| entries[i * 4 + j]);
        let s = numkit::Subspace::span(&m, &Tolerances::default()).unwrap();
        let p = s.projector();
        prop_assert!((&p * &p - &p).amax() < 1e-10);
        prop_assert!((p.transpose() - &p).amax() < 1e-10);
        prop_assert!((&p * &m - &m).amax() < 1e-9);
    }

    #[test]
    fn gauge_groupoid_axioms(x in coords(2, 0.5), y in coords(2, 0.5), z in coords(2, 0.5), w in coords(2, 0.5), a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        let entry = catalog::build("euclidean2").unwrap();
        let gg = GaugeGroupoid::new(&entry.bundle);
        let h = |t: f64| entry.bundle.group.exp_coords(&Vector::from_vec(vec![t])).unwrap();
        let g1 = Arrow::new(x.clone(), h(a), y.clone());
        let g2 = Arrow::new(y.clone(), h(b), z.clone());
        let g3 = Arrow::new(z.clone(), h(c), w.clone());
        let left = gg.mult(&gg.mult(&g1, &g2).unwrap(), &g3).unwrap();
        let right = gg.mult(&g1, &gg.mult(&g2, &g3).unwrap()).unwrap();
        prop_assert!((left.h - right.h).amax() < 1e-12);
        let u = gg.mult(&gg.unit(&x), &g1).unwrap();
        prop_assert!((u.h - &g1.h).amax() < 1e-15);
        let inv = gg.mult(&g1, &g1.inverse().unwrap()).unwrap();
        prop_assert!((inv.h - Mat::identity(2, 2)).amax() < 1e-12);
        prop_assert_eq!(&inv.y, &x);
        prop_assert!(gg.mult(&g1, &g3).is_err() || y == z);
    }

    #[test]
    fn induced_form_is_multiplicative(name in prop::sample::select(vec!["euclidean2", "riemannian_halfplane", "affine2_torsion"]), seed in coords(40, 1.0)) {
        let entry = catalog::build(name).unwrap();
        let cb = &entry.bundle;
        let w = groupoid::omega_from_theta(cb);
        let rep = GroupoidRep::from_coefficients(&cb.coeffs);
        let gg = &w.groupoid;
        let (m, k) = (gg.m(), gg.dim_h());
        let point = |o: usize| -> Vector {
            Vector::from_fn(m, |i, _| {
                let (lo, hi) = (cb.chart.lower[i], cb.chart.upper[i]);
                lo + (hi - lo) * (0.5 + 0.45 * seed[o + i])
            })
        };
        let elem = |o: usize| cb.group.exp_coords(&Vector::from_fn(k, |i, _| seed[o + i])).unwrap();
        let (x, y, z) = (point(0), point(2), point(4));
        let g1 = Arrow::new(x, elem(6), y.clone());
        let g2 = Arrow::new(y, elem(12), z);
        let t1 = ArrowTangent::from_vector(&Vector::from_fn(gg.dim(), |i, _| seed[18 + i]), m);
        let mut t2 = ArrowTangent::from_vector(&Vector::from_fn(gg.dim(), |i, _| seed[30 - i]), m);
        t2.v_x = t1.v_y.clone();
        let r = groupoid::multiplicative_residual(&w, &rep, &g1, &g2, &t1, &t2).unwrap();
        prop_assert!(r < 1e-9, "residual {}", r);
    }
}
