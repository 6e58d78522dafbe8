mod common;

use proptest::prelude::*;

use common::{admissible_pq, admissible_z, rng};
use slcalib::analysis::periodicity_from_pq;
use slcalib::cgeom::{c, cross, det3, g, herm, omega, C64};
use slcalib::cli::{num, ParamSet};
use slcalib::families::FourierPoly;
use slcalib::flow::{constraint_residuals_pq, constraint_residuals_z, integrate_final, rhs_pq, rhs_z, IntegratorCfg};
use slcalib::specfun::{jacobi, EllipticModulus};
use slcalib::symmetry::{GL2AffineParams, KGroupParams};
use slcalib::Complex3;

fn cplx() -> impl Strategy<Value = C64> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| c(a, b))
}

fn vec3() -> impl Strategy<Value = Complex3> {
    (cplx(), cplx(), cplx()).prop_map(|(a, b, c)| Complex3::new(a, b, c))
}

fn gl2() -> impl Strategy<Value = GL2AffineParams> {
    prop::array::uniform6(-3.0..3.0f64)
        .prop_filter("invertible", |v| (v[0] * v[3] - v[1] * v[2]).abs() > 0.1)
        .prop_map(|v| GL2AffineParams::new(v[0], v[1], v[2], v[3], v[4], v[5]).unwrap())
}

fn kgroup(k: usize) -> impl Strategy<Value = KGroupParams> {
    (0.2..2.0f64, -1.0..1.0f64, 0.2..2.0f64, prop::collection::vec(-1.0..1.0f64, k))
        .prop_map(|(a, b, c, d)| KGroupParams::new(a, b, c, d).unwrap())
}

fn close3(a: (f64, f64, f64), b: (f64, f64, f64), tol: f64) -> bool {
    let s = 1.0 + a.0.abs().max(a.1.abs()).max(a.2.abs());
    (a.0 - b.0).abs() <= tol * s && (a.1 - b.1).abs() <= tol * s && (a.2 - b.2).abs() <= tol * s
}

proptest! {
    #[test]
    fn forms_are_symmetric_and_skew(u in vec3(), v in vec3()) {
        prop_assert!((g(&u, &v) - g(&v, &u)).abs() <= 1e-12 * (1.0 + u.norm() * v.norm()));
        prop_assert!((omega(&u, &v) + omega(&v, &u)).abs() <= 1e-12 * (1.0 + u.norm() * v.norm()));
        prop_assert_eq!(omega(&u, &u), 0.0);
    }

    #[test]
    fn cross_identities(u in vec3(), v in vec3(), w in vec3(), a in cplx()) {
        let s = 1.0 + u.norm() * v.norm() * w.norm() * (1.0 + a.norm());
        let lhs = cross(&(a * u + v), &w);
        prop_assert!((lhs - (a.conj() * cross(&u, &w) + cross(&v, &w))).norm() <= 1e-13 * s);
        let m = [u.as_array(), v.as_array(), w.as_array()];
        prop_assert!((herm(&cross(&u, &v), &w) - det3(&m) * 0.5).norm() <= 1e-13 * s);
        let dc = cross(&u, &cross(&u, &w));
        let want = u.scale(herm(&u, &w) * 0.25) - w.scale_re(0.25 * u.norm_sqr());
        prop_assert!((dc - want).norm() <= 1e-13 * (1.0 + u.norm_sqr() * w.norm()));
    }

    #[test]
    fn z_flow_keeps_constraints(seed in any::<u64>()) {
        let s0 = admissible_z(&mut rng(seed), 0.5);
        prop_assert!(constraint_residuals_z(&s0).iter().all(|r| r.abs() < 1e-13));
        let s1 = integrate_final(rhs_z, &s0, 0.0, 0.5, &IntegratorCfg::rk4(1e-3)).unwrap();
        prop_assert!(constraint_residuals_z(&s1).iter().all(|r| r.abs() < 1e-11));
    }

    #[test]
    fn pq_flow_keeps_constraints(seed in any::<u64>(), k in 1usize..6) {
        let s0 = admissible_pq(&mut rng(seed), k, 0.4);
        prop_assert!(constraint_residuals_pq(&s0).iter().all(|r| r.abs() < 1e-13));
        let s1 = integrate_final(rhs_pq, &s0, 0.0, 0.5, &IntegratorCfg::rk4(1e-3)).unwrap();
        prop_assert!(constraint_residuals_pq(&s1).iter().all(|r| r.abs() < 1e-11));
    }

    #[test]
    fn gl2_composition_matches_coordinates(g1 in gl2(), g2 in gl2(), y1 in -2.0..2.0f64, y2 in -2.0..2.0f64, t in -2.0..2.0f64) {
        let (a, b, tt) = g2.coords(y1, y2, t);
        prop_assert!(close3(g1.then(&g2).coords(y1, y2, t), g1.coords(a, b, tt), 1e-12));
        let id = g1.then(&g1.inverse());
        prop_assert!(close3(id.coords(y1, y2, t), (y1, y2, t), 1e-12));
    }

    #[test]
    fn k_group_composition_matches_coordinates(g1 in kgroup(4), g2 in kgroup(4), x in -2.0..2.0f64, y in -2.0..2.0f64, t in -2.0..2.0f64) {
        let (a, b, tt) = g2.coords(x, y, t);
        prop_assert!(close3(g1.then(&g2).coords(x, y, t), g1.coords(a, b, tt), 1e-12));
    }

    #[test]
    fn periodicity_data_is_consistent(p in 1i64..60, q in 3i64..120) {
        let admissible = 2 * p < q && num_integer::Integer::gcd(&p, &q) == 1;
        match periodicity_from_pq(p, q) {
            Ok((s, al)) => {
                prop_assert!(admissible);
                prop_assert_eq!(s.a.iter().sum::<i64>(), 0);
                prop_assert_eq!(s.lambda % 2, 1);
                prop_assert_eq!(s.lambda * s.lambda, s.a[0] * s.a[0] - s.a[1] * s.a[2]);
                prop_assert!(al.harmonic_residual().abs() < 1e-12);
            }
            Err(_) => prop_assert!(!admissible),
        }
    }

    #[test]
    fn numbers_round_trip_through_param_files(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let ps = ParamSet::parse_text(&format!("v = {}\n", num(x))).unwrap();
        prop_assert_eq!(ps.get("v"), Some(x));
    }

    #[test]
    fn jacobi_identities(k in 0.0..=1.0f64, t in -20.0..20.0f64) {
        let (s, cn, d) = jacobi(t, EllipticModulus::new(k).unwrap());
        prop_assert!((s * s + cn * cn - 1.0).abs() < 1e-12);
        prop_assert!((d * d + k * k * s * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_derivative(coeffs in prop::collection::btree_map(-8i64..8, cplx(), 0..6), lin in cplx(), t in -5.0..5.0f64) {
        let p = FourierPoly { coeffs, linear: lin };
        let scale = 1.0 + p.coeffs.values().map(|c| c.norm()).sum::<f64>() * 8.0;
        prop_assert!((p.deriv().eval(t) - p.deriv_eval(t)).norm() <= 1e-12 * scale);
    }
}
