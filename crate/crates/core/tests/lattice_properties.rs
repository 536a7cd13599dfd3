mod common;

use common::{direct_deviation, dyadic, gcd, random_unimodular};
use proptest::prelude::*;
use rand::Rng;
use rotset_core::engine::{deviation, deviation_along};
use rotset_core::lattice::{
    check_conjugacy, complete_to_unimodular, conjugate_lift, extended_gcd, line_frame_transform,
    AffineSymmetry, ConjugacyTarget,
};
use rotset_core::sampling::task_rng;
use rotset_core::{DirectionalFrame, LiftMap, Vec2};

#[test]
fn deviation_equivariance_under_reduction() {
    let map = LiftMap::mz(0.5, 0.5);
    let mut rng = task_rng(0xD1, 0);
    for i in 0..1000 {
        let m = random_unimodular(&mut rng);
        let z = dyadic(&mut rng);
        let rho = Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let n = rng.random_range(1..=100);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let v = Vec2::new(angle.cos(), angle.sin());

        let lhs = deviation_along(&map, z, rho, n, v).unwrap();
        let conj = conjugate_lift(&map, m);
        let v_tilde = m.apply_transpose(v);
        let rhs =
            deviation_along(&conj, m.apply_inverse(z), m.apply_inverse(rho), n, v_tilde).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-8,
            "instance {i}: {lhs} vs {rhs} (M = {m})"
        );
    }
}

#[test]
fn deviation_matches_direct_loop() {
    let map = LiftMap::mz(0.5, 0.5);
    let mut rng = task_rng(0xD2, 0);
    for _ in 0..100 {
        let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
        let rho = Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let n = rng.random_range(1..=500);
        let oracle = direct_deviation(0.5, 0.5, z, rho, n);
        let got = deviation(&map, z, rho, n).unwrap();
        assert!((got - oracle).norm() <= 1e-9);
    }
}

#[test]
fn line_membership_is_transported() {
    let mut rng = task_rng(0xD3, 0);
    for _ in 0..200 {
        let m = random_unimodular(&mut rng);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let lambda = rng.random_range(-2.0..2.0);
        let frame =
            DirectionalFrame::new(Vec2::new(angle.cos(), angle.sin()), lambda, 0.0, 0.0).unwrap();
        let t = line_frame_transform(&frame, &m);
        let s = rng.random_range(-3.0..3.0);
        let on = frame.v * lambda + frame.v_perp * s;
        assert!(t.frame.on_line(m.apply_inverse(on), 1e-9));
        let off = on + frame.v * 0.1;
        assert!(!t.frame.on_line(m.apply_inverse(off), 1e-6));
    }
}

#[test]
fn conjugation_is_functorial() {
    let map = LiftMap::mz(0.37, 0.61);
    let mut rng = task_rng(0xD4, 0);
    for _ in 0..50 {
        let m = random_unimodular(&mut rng);
        let back = conjugate_lift(&conjugate_lift(&map, m), m.inverse());
        for _ in 0..20 {
            let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
            assert!((back.eval(z) - map.eval(z)).norm() <= 1e-9);
        }
        let conj = conjugate_lift(&map, m);
        assert!(rotset_core::lift::translate_commutation_check(&conj, 100, 1).unwrap() <= 1e-9);
    }
}

proptest! {
    #[test]
    fn completion_has_unit_determinant(a in -1_000_000i64..=1_000_000, b in -1_000_000i64..=1_000_000) {
        prop_assume!((a, b) != (0, 0) && gcd(a, b) == 1);
        let m = complete_to_unimodular((a, b)).unwrap();
        prop_assert_eq!(m.column(0), (a, b));
        prop_assert_eq!(m.determinant(), 1);
        let [[p, r], [q, s]] = m.rows();
        prop_assert_eq!(p * s - r * q, 1);
    }

    #[test]
    fn non_coprime_vectors_are_rejected(a in -1000i64..=1000, b in -1000i64..=1000, k in 2i64..20) {
        prop_assert!(complete_to_unimodular((a * k, b * k)).is_err());
    }

    #[test]
    fn bezout_identity(a in -1_000_000i64..=1_000_000, b in -1_000_000i64..=1_000_000) {
        let (g, s, t) = extended_gcd(a, b);
        prop_assert_eq!(a * s + b * t, g);
        prop_assert_eq!(g.abs(), gcd(a, b));
    }

    #[test]
    fn s_is_a_self_symmetry(alpha in -1.0..1.0f64, beta in -1.0..1.0f64) {
        let err = check_conjugacy(&LiftMap::mz(alpha, beta), &AffineSymmetry::S, ConjugacyTarget::Itself, 200, 5).unwrap();
        prop_assert!(err <= 1e-9, "{err}");
        let err = check_conjugacy(&LiftMap::mz(alpha, beta), &AffineSymmetry::T, ConjugacyTarget::Itself, 200, 5).unwrap();
        prop_assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn r_conjugates_to_inverse_on_the_diagonal(alpha in -1.0..1.0f64) {
        let err = check_conjugacy(&LiftMap::mz(alpha, alpha), &AffineSymmetry::R, ConjugacyTarget::Inverse, 200, 5).unwrap();
        prop_assert!(err <= 1e-9, "{err}");
    }
}
