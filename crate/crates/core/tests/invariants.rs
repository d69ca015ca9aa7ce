use proptest::prelude::*;

use qrdyn::dynamics::{self, OrbitParams};
use qrdyn::g_example::{self, build_schedule};
use qrdyn::inf_space::mean_radius_bracket;
use qrdyn::local_metrics::{self, SamplingConfig};
use qrdyn::map_catalog::{Branch, MapSpec};
use qrdyn::poly_type;
use qrdyn::Point;

fn o() -> Point {
    Point::origin(2)
}

fn local_map() -> impl Strategy<Value = MapSpec> {
    prop_oneof![
        (2u32..=4).prop_map(|d| MapSpec::power(d).unwrap()),
        (1.05f64..1.95).prop_map(|l| MapSpec::stretch_square(l).unwrap()),
        (1.1f64..2.5).prop_map(|k| MapSpec::pure_annulus_power(k, Branch::Fast).unwrap()),
        (1.1f64..2.5).prop_map(|k| MapSpec::pure_annulus_power(k, Branch::Slow).unwrap()),
        (2u32..=3).prop_map(|k| MapSpec::winding(k).unwrap()),
    ]
}

fn polynomial_map() -> impl Strategy<Value = MapSpec> {
    prop_oneof![
        (2u32..=3).prop_map(|d| MapSpec::power(d).unwrap()),
        (1.05f64..1.95).prop_map(|l| MapSpec::stretch_square(l).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_contains_surrogate(f in local_map(), s in 0.01f64..0.99) {
        let cfg = SamplingConfig::default();
        let r = local_metrics::r0(&f, &o(), &cfg).unwrap() * s;
        let b = mean_radius_bracket(&f, &o(), r, &cfg).unwrap();
        prop_assert!(b.log_l <= b.log_big_l);
        let rho = b.rho_hat().ln();
        prop_assert!(b.log_l <= rho + 1e-12 && rho <= b.log_big_l + 1e-12);
    }

    #[test]
    fn sphere_extrema_nondecreasing(f in local_map(), a in 0.01f64..0.9, b in 0.01f64..0.9) {
        let cfg = SamplingConfig::default();
        let r0 = local_metrics::r0(&f, &o(), &cfg).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let rep = local_metrics::check_monotonicity(&f, &o(), &[lo * r0, hi * r0], &cfg).unwrap();
        prop_assert!(rep.ok);
    }

    #[test]
    fn orbit_stays_inside_iterated_extrema(
        f in prop_oneof![
            (2u32..=3).prop_map(|d| MapSpec::power(d).unwrap()),
            (1.05f64..1.95).prop_map(|l| MapSpec::stretch_square(l).unwrap()),
            (1.1f64..2.0).prop_map(|k| MapSpec::pure_annulus_power(k, Branch::Fast).unwrap()),
        ],
        rad in 0.05f64..0.45,
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let cfg = SamplingConfig::default();
        let x = Point::new2(rad * theta.cos(), rad * theta.sin());
        let trace = dynamics::iterate_orbit(&f, &x, &o(), &OrbitParams::unbounded(12)).unwrap();
        let rep = dynamics::check_sandwich(&f, &trace, 1e-9, &cfg).unwrap();
        prop_assert!(rep.ok, "violation {}", rep.worst_violation);
    }

    #[test]
    fn fast_escape_implies_escape(f in polynomial_map(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let cfg = SamplingConfig::default();
        let big_r = (0..20)
            .map(|j| 2f64.powi(j))
            .find(|&r| poly_type::check_escape_radius(&f, r, &cfg).is_ok())
            .unwrap();
        let v = poly_type::escape_verdict(&f, &Point::new2(x, y), big_r, 60, &cfg).unwrap();
        prop_assert!(!v.in_a || v.in_i);
        prop_assert_eq!(v.horizon_artifact, v.in_i != v.in_a);
    }

    #[test]
    fn rate_comparison_is_symmetric(
        k in 1.1f64..2.0,
        a in 0.05f64..0.6,
        b in 0.05f64..0.6,
    ) {
        let f = MapSpec::pure_annulus_power(k, Branch::Fast).unwrap();
        let (x, y) = (Point::new2(a, 0.0), Point::new2(0.0, b));
        let xy = dynamics::estimate_alpha(&f, &[x, y], &o(), 60).unwrap();
        let yx = dynamics::estimate_alpha(&f, &[y, x], &o(), 60).unwrap();
        prop_assert!((xy.alpha_est - yx.alpha_est).abs() <= 1e-9 * xy.alpha_est.abs().max(1.0));
    }

    #[test]
    fn random_schedules_are_continuous(
        k in 1.05f64..1.95,
        counts in prop::collection::vec((1usize..30, 1usize..30), 1..5),
        u0 in 0.1f64..2.0,
    ) {
        let s = build_schedule(k, &counts, u0).unwrap();
        prop_assert!(s.continuity_defect() <= 1e-9);
        prop_assert!(s.interlaced());
        let json = s.to_json().unwrap();
        let back = g_example::AnnulusSchedule::from_json(&json).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn minimum_modulus_nondecreasing(f in polynomial_map(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let cfg = SamplingConfig::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m_lo = local_metrics::log_modulus(&f, 2.0 * 10f64.powf(lo), &cfg).unwrap().1;
        let m_hi = local_metrics::log_modulus(&f, 2.0 * 10f64.powf(hi), &cfg).unwrap().1;
        prop_assert!(m_lo <= m_hi + 1e-12);
    }
}
