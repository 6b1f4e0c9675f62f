//! Cross-module invariants checked on random inputs.

use adsnull::curves::{
    closure_period, integrate_spinor_frames, kappa_mn, verify_null_geometry, BendingProfile, ClosedForm, SGrid,
};
use adsnull::kdv::{frame_path_check, kdv_residual, KdvSolution, STGrid, Soliton1};
use adsnull::pipeline::export::{read_curve_csv, write_curve_csv};
use adsnull::pipeline::config::SolitonConfig;
use adsnull::pipeline::{config_hash, torus_embed};
use adsnull::ttransform::{solve_riccati, t_transform};
use adsnull::Mat2;
use num_integer::Integer;
use proptest::prelude::*;

fn coprime_mn() -> impl Strategy<Value = (i64, i64)> {
    (1i64..6, 1i64..8).prop_map(|(n, d)| (n + d, n)).prop_filter("coprime", |(m, n)| m.gcd(n) == 1)
}

fn wave(a: f64, b: f64) -> BendingProfile {
    BendingProfile::ClosedForm(
        ClosedForm::new("a + sin(b s)", move |s| a + (b * s).sin())
            .with_derivatives(move |s| b * (b * s).cos(), move |s| -b * b * (b * s).sin()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frames_stay_unimodular_and_curve_is_null(a in -2.0..2.0f64, b in 0.2..2.0f64) {
        let grid = SGrid::covering(0.0, 3.0, 2e-3).unwrap();
        let c = integrate_spinor_frames(&wave(a, b), grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        for (p, m) in c.fplus.iter().zip(&c.fminus) {
            prop_assert!((p.det() - 1.0).abs() < 1e-13 * p.frob().powi(2).max(1.0));
            prop_assert!((m.det() - 1.0).abs() < 1e-13 * m.frob().powi(2).max(1.0));
        }
        let r = verify_null_geometry(&c).unwrap();
        prop_assert!(r.max_null_defect < 1e-4);
        prop_assert!(r.future_directed);
    }

    #[test]
    fn constant_curves_close_after_one_period((m, n) in coprime_mn()) {
        let k = kappa_mn(m, n).unwrap();
        let p = closure_period(k, 10_000).unwrap();
        let grid = SGrid::covering(0.0, p.length, 1e-2).unwrap();
        let c = integrate_spinor_frames(&BendingProfile::Constant(k), grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        prop_assert!((c.gamma[c.len() - 1] - c.gamma[0]).frob() < 1e-8);
    }

    #[test]
    fn transform_determinants_are_constant(a in -2.0..-1.2f64, b in 0.2..1.0f64, xi in 0.4..1.5f64, c0 in -0.5..0.5f64) {
        let profile = wave(a, b);
        let grid = SGrid::covering(0.0, 1.0, 1e-3).unwrap();
        let curve = integrate_spinor_frames(&profile, grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        let sol = solve_riccati(&profile, grid, xi, 0.0, c0).unwrap();
        prop_assume!(sol.is_pole_free());
        let t = t_transform(&curve, &sol, 1).unwrap();
        prop_assert!(t.det_plus.max_deviation < 1e-8);
        prop_assert!(t.det_minus.max_deviation < 1e-8);
        prop_assert!(t.chi.max_deviation + t.chi.mean.abs() < 1e-8);
        prop_assert!((t.det_plus.mean - 1.0 / (2f64.sqrt() * xi.sinh())).abs() < 1e-8);
    }

    #[test]
    fn torus_image_of_a_curve_is_inside(k in -4.0..1.0f64) {
        let grid = SGrid::covering(0.0, 6.0, 1e-2).unwrap();
        let c = integrate_spinor_frames(&BendingProfile::Constant(k), grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        for g in &c.gamma {
            prop_assert!(torus_embed(g).unwrap().is_inside());
        }
    }

    #[test]
    fn curve_csv_round_trips_exactly(k in -3.0..3.0f64, len in 0.5..3.0f64) {
        let grid = SGrid::covering(0.0, len, 0.05).unwrap();
        let c = integrate_spinor_frames(&BendingProfile::Constant(k), grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&path, &c).unwrap();
        let (s, g, kappa) = read_curve_csv(&path).unwrap();
        prop_assert_eq!(s, grid.points());
        prop_assert_eq!(g, c.gamma);
        prop_assert_eq!(kappa, c.kappa);
    }

    #[test]
    fn config_hash_tracks_every_field(p in 0.1..3.0f64, dp in 1e-6..1.0f64) {
        let a = SolitonConfig { p, ..SolitonConfig::default() };
        let b = SolitonConfig { p: p + dp, ..SolitonConfig::default() };
        prop_assert_eq!(config_hash(&a).unwrap(), config_hash(&a.clone()).unwrap());
        prop_assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solitons_solve_kdv_at_second_order(p in 0.6..2.0f64, c in -0.3..0.3f64) {
        let k0 = kappa_mn(4, 1).unwrap();
        let sol = KdvSolution::Soliton1(Soliton1 { kappa0: k0, lambda: p - k0, c, s0: 0.0, t0: 0.0 });
        let g = STGrid::covering((-3.0, 3.0), (-0.1, 0.1), 0.02, 0.005).unwrap();
        prop_assume!(!sol.sample(&g).1.iter().any(|p| *p));
        let r = kdv_residual(&sol, &g).unwrap() / kdv_residual(&sol, &g.refined()).unwrap();
        prop_assert!((r - 4.0).abs() < 0.6, "ratio {}", r);
    }

    #[test]
    fn flatness_separates_kdv_from_other_fields(p in 0.6..2.0f64, a in 0.5..2.0f64, l in 1.5..3.0f64) {
        let g = STGrid::covering((-1.0, 1.0), (-0.5, 0.5), 0.02, 0.02).unwrap();
        let k0 = kappa_mn(4, 1).unwrap();
        let good = KdvSolution::Soliton1(Soliton1 { kappa0: k0, lambda: p - k0, c: 0.0, s0: 0.0, t0: 0.0 });
        prop_assert!(frame_path_check(&good, l, g).unwrap().is_flat());
        let bad = KdvSolution::from_fn(g, |s, t| k0 + a * s * t).unwrap();
        prop_assert!(!frame_path_check(&bad, l, g).unwrap().is_flat());
    }
}
