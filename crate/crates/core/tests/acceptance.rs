//! Acceptance gate: one PASS/FAIL line per criterion at the pinned tolerances.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the table.

use std::process::Command;
use std::time::Instant;

use adsnull::curves::{
    closure_period, integrate_spinor_frames, kappa_mn, verify_null_geometry, BendingProfile, GeometryReport,
    NullCurve, SGrid,
};
use adsnull::kdv::{
    decay_window, extended_frame_numeric, frame_equation_residual, frame_path_check, kdv_residual_values, lien_curve,
    rigid_motion_check, soliton_chain, KdvSolution, STGrid, Soliton1,
};
use adsnull::pipeline::config::{FrenetConfig, VerifyConfig};
use adsnull::pipeline::export::write_frames_csv;
use adsnull::pipeline::run::{run_frenet, run_verify};
use adsnull::ttransform::{
    constant_bending_chi, constant_bending_transform, double_transform, permute, solve_riccati, t_transform,
    TransformKind,
};
use adsnull::{Error, Mat2};

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(id: u32, name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { id, name, passed, detail }
}

fn within_ratio(r: f64, target: f64, tol: f64) -> bool {
    (r - target).abs() <= tol
}

fn constant_curve(kappa: f64, h: f64) -> NullCurve {
    let period = closure_period(kappa, 10_000).unwrap();
    let grid = SGrid::covering(0.0, period.length, h).unwrap();
    integrate_spinor_frames(&BendingProfile::Constant(kappa), grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap()
}

fn closure(dir: &std::path::Path) -> Outcome {
    let cfg = FrenetConfig { out_dir: dir.join("frenet"), h: 1e-4, ..FrenetConfig::default() };
    let start = Instant::now();
    let out = run_frenet(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let gap = out.report["closure_gap"].as_f64().unwrap();
    let knot = out.report["knot_type"].clone();
    let passed = gap <= 1e-6 && secs <= 10.0 && knot == serde_json::json!([2, 5]) && out.passed();
    outcome(
        1,
        "closure of the (7,3) curve",
        passed,
        format!("gap {gap:.2e} (<= 1e-6), runtime {secs:.2} s (<= 10), knot {knot}"),
    )
}

fn sine_report(h: f64) -> GeometryReport {
    let grid = SGrid::covering(0.0, 2.0 * std::f64::consts::PI, h).unwrap();
    let curve = integrate_spinor_frames(&BendingProfile::sine(), grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
    verify_null_geometry(&curve).unwrap()
}

fn bending_round_trip() -> Outcome {
    let a = sine_report(1e-3);
    let b = sine_report(5e-4);
    let ratios = [
        a.max_null_defect / b.max_null_defect,
        a.max_proper_time_defect / b.max_proper_time_defect,
        a.max_bending_defect / b.max_bending_defect,
    ];
    let bounds = a.max_null_defect <= 1e-6 && a.max_proper_time_defect <= 1e-4 && a.max_bending_defect <= 1e-3;
    let orders = ratios.iter().all(|r| within_ratio(*r, 4.0, 0.8));
    outcome(
        2,
        "bending round trip for sin s",
        bounds && orders,
        format!(
            "h=1e-3: null {:.2e} (<= 1e-6), proper {:.2e} (<= 1e-4), bending {:.2e} (<= 1e-3); \
             halving ratios {:.2} / {:.2} / {:.2} (4 +- 0.8)",
            a.max_null_defect, a.max_proper_time_defect, a.max_bending_defect, ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn determinant_constants() -> Outcome {
    let k = kappa_mn(7, 3).unwrap();
    let curve = constant_curve(k, 1e-3);
    let xi = 1.01;
    let sol = solve_riccati(&BendingProfile::Constant(k), curve.grid, xi, 0.0, 0.1).unwrap();
    let t = t_transform(&curve, &sol, 1).unwrap();
    let want_p = 1.0 / (std::f64::consts::SQRT_2 * xi.sinh());
    let want_m = 1.0 / (std::f64::consts::SQRT_2 * xi.cosh());
    let dp = t.det_plus.max_deviation + (t.det_plus.mean - want_p).abs();
    let dm = t.det_minus.max_deviation + (t.det_minus.mean - want_m).abs();
    let chi = t.chi.max_deviation + t.chi.mean.abs();
    outcome(
        3,
        "T-transform determinant constants",
        sol.is_pole_free() && dp <= 1e-8 && dm <= 1e-8 && chi <= 1e-8,
        format!("det+ gap {dp:.2e}, det- gap {dm:.2e}, chi {chi:.2e} (all <= 1e-8), pole free {}", sol.is_pole_free()),
    )
}

fn constant_bending_family() -> Outcome {
    let k = kappa_mn(7, 3).unwrap();
    let curve = constant_curve(k, 1e-3);
    let mut worst_bending: f64 = 0.0;
    let mut worst_chi: f64 = 0.0;
    for (cp, cm) in [(2.0, 2.0), (1.0, 1.8), (-1.5, 2.5), (0.8, -3.0)] {
        let t = constant_bending_transform(k, &curve, cp, cm, 1, 1).unwrap();
        let g = verify_null_geometry(&t.curve).unwrap();
        let TransformKind::ConstantBending { f_plus, f_minus, .. } = t.kind else { unreachable!() };
        let want = constant_bending_chi(f_plus, f_minus, cp, cm);
        worst_bending = worst_bending.max(g.max_bending_defect);
        worst_chi = worst_chi.max((t.chi.mean - want).abs() + t.chi.max_deviation);
    }
    outcome(
        4,
        "constant-bending transform family",
        worst_bending <= 1e-3 && worst_chi <= 1e-8,
        format!("bending defect {worst_bending:.2e} (<= 1e-3), chi gap {worst_chi:.2e} (<= 1e-8) over 4 pairs"),
    )
}

fn permutability() -> Outcome {
    let k = kappa_mn(4, 1).unwrap();
    let profile = BendingProfile::Constant(k);
    let grid = SGrid::covering(0.0, 2.0, 1e-3).unwrap();
    let curve = integrate_spinor_frames(&profile, grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
    let s1 = solve_riccati(&profile, grid, 0.8, 0.0, -0.5).unwrap();
    let s2 = solve_riccati(&profile, grid, 1.2, 0.0, 0.3).unwrap();
    let perm = permute(&profile, grid, &s1, &s2).unwrap();
    let d = double_transform(&curve, &perm).unwrap();
    outcome(
        5,
        "permutability of double transforms",
        d.max_discrepancy <= 1e-6 && d.g_identity_residual <= 1e-10,
        format!(
            "curve gap {:.2e} (<= 1e-6), G identity {:.2e} (<= 1e-10)",
            d.max_discrepancy, d.g_identity_residual
        ),
    )
}

fn soliton_kdv_residual() -> Outcome {
    let res = |g: STGrid| {
        let chain = soliton_chain(4, 1, 1.4, 1.0, 0.0, 0.0, g).unwrap();
        let (v, p) = chain.kappa1.sample(&g);
        kdv_residual_values(&v, &p, &g).unwrap()
    };
    let g = STGrid::covering((-10.0, 10.0), (-0.5, 0.5), 0.02, 0.01).unwrap();
    let (a, b) = (res(g), res(g.refined()));
    let r = a / b;
    outcome(
        6,
        "1-soliton KdV residual order",
        within_ratio(r, 4.0, 0.5),
        format!("residual {a:.3e} -> {b:.3e}, ratio {r:.3} (4 +- 0.5)"),
    )
}

fn decay_bounds() -> Outcome {
    let g = STGrid::covering((-1.0, 1.0), (-0.1, 0.1), 0.1, 0.05).unwrap();
    let chain = soliton_chain(4, 1, 1.4, 1.0, 0.0, 0.0, g).unwrap();
    let (s1, s2) = (chain.soliton1(), chain.soliton2());
    let w1 = decay_window(|s| s1.jet(s, 0.0).k, chain.kappa0, 2.31e-9, 40.0, 0.05).unwrap();
    let w2 = decay_window(|s| s2.jet(s, 0.0).k, chain.kappa0, 1.73e-8, 40.0, 0.05).unwrap();
    outcome(
        7,
        "soliton decay bounds",
        w1.holds() && w2.holds(),
        format!(
            "k1 window [{:.4}, {:.4}] max outside {:.3e} (<= 2.31e-9); k2 window [{:.4}, {:.4}] max outside {:.3e} (<= 1.73e-8)",
            w1.left, w1.right, w1.max_outside, w2.left, w2.right, w2.max_outside
        ),
    )
}

fn recon_validity() -> Outcome {
    let run = |g: STGrid| {
        let chain = soliton_chain(4, 1, 1.4, 1.0, 0.0, 0.0, g).unwrap();
        let sol = KdvSolution::Soliton1(chain.soliton1());
        let r = frame_equation_residual(&chain.e_tilde_omega, &sol).unwrap().max();
        (r, chain.e_tilde_omega.max_det_defect())
    };
    let g = STGrid::covering((-1.5, 1.5), (-0.05, 0.05), 0.01, 0.001).unwrap();
    let ((a, da), (b, db)) = (run(g), run(g.refined()));
    let r = a / b;
    let det = da.max(db);
    outcome(
        8,
        "reconstructed frame validity",
        within_ratio(r, 4.0, 0.5) && det <= 1e-10,
        format!("residual {a:.3e} -> {b:.3e}, ratio {r:.3} (4 +- 0.5), det defect {det:.2e} (<= 1e-10)"),
    )
}

fn soliton1() -> Soliton1 {
    let k0 = kappa_mn(4, 1).unwrap();
    Soliton1 { kappa0: k0, lambda: 1.4 - k0, c: 0.0, s0: 0.0, t0: 0.0 }
}

fn lien_realization() -> Outcome {
    let sol = KdvSolution::Soliton1(soliton1());
    let g = STGrid::covering((-4.0, 4.0), (-0.2, 0.2), 0.02, 0.005).unwrap();
    let a = lien_curve(&sol, g).unwrap().residual().unwrap();
    let b = lien_curve(&sol, g.refined()).unwrap().residual().unwrap();
    let r = a / b;

    let fine = STGrid::covering((-4.0, 4.0), (-0.2, 0.2), 1e-3, 0.05).unwrap();
    let flow = lien_curve(&sol, fine).unwrap();
    let (mut null, mut proper, mut bending, mut future): (f64, f64, f64, bool) = (0.0, 0.0, 0.0, true);
    for j in 0..fine.nt {
        let rep = verify_null_geometry(&flow.slice_curve(j).unwrap()).unwrap();
        null = null.max(rep.max_null_defect);
        proper = proper.max(rep.max_proper_time_defect);
        bending = bending.max(rep.max_bending_defect);
        future &= rep.future_directed && rep.min_inflection_norm > 0.0;
    }
    let slices = null <= 1e-6 && proper <= 1e-4 && bending <= 1e-3 && future;
    outcome(
        9,
        "LIEN realization of the 1-soliton",
        within_ratio(r, 4.0, 0.5) && slices,
        format!(
            "lien residual ratio {r:.3} (4 +- 0.5); over {} slices: null {null:.2e}, proper {proper:.2e}, bending {bending:.2e} (<= 1e-3), future directed {future}",
            fine.nt
        ),
    )
}

fn rigid_motion() -> Outcome {
    let g = STGrid::covering((-10.0, 10.0), (-0.5, 0.5), 0.01, 0.05).unwrap();
    let chain = soliton_chain(4, 1, 1.4, 1.0, 0.0, 0.0, g).unwrap();
    let (v, _) = chain.kappa1.sample(&g);
    let rep = rigid_motion_check(&v, &g, chain.soliton1().velocity()).unwrap();
    outcome(
        10,
        "rigid motion of the 1-soliton",
        rep.max_mismatch <= 1e-4,
        format!(
            "aligned mismatch {:.2e} (<= 1e-4), fitted velocity {:.6} vs {:.6}",
            rep.max_mismatch, rep.fitted_velocity, rep.expected_velocity
        ),
    )
}

fn negative_controls(dir: &std::path::Path) -> Outcome {
    // flatness: κ = s·t is not a KdV solution
    let g = STGrid::covering((-1.0, 1.0), (-1.0, 1.0), 0.01, 0.01).unwrap();
    let bad = KdvSolution::from_fn(g, |s, t| s * t).unwrap();
    let check = frame_path_check(&bad, 2.0, g).unwrap();
    let factor = check.discrepancy / check.tolerance;
    let rejected = factor > 10.0 && matches!(extended_frame_numeric(&bad, 2.0, g), Err(Error::NotKdv { .. }));

    // a frame file with one F₊ scaled by 1.01
    let grid = SGrid::covering(0.0, 1.0, 1e-3).unwrap();
    let mut curve =
        integrate_spinor_frames(&BendingProfile::Constant(kappa_mn(7, 3).unwrap()), grid, Mat2::IDENTITY, Mat2::IDENTITY)
            .unwrap();
    let path = dir.join("corrupted_frames.csv");
    curve.fplus[500] = curve.fplus[500] * 1.01;
    write_frames_csv(&path, &curve).unwrap();
    let lib = match run_verify(&VerifyConfig { frames: Some(path.clone()), ..VerifyConfig::default() }) {
        Err(Error::Invariant { name, .. }) => name,
        other => format!("{other:?}"),
    };
    let cli = Command::new(env!("CARGO_BIN_EXE_adsnull")).arg("verify").arg("--frames").arg(&path).output().unwrap();
    let stderr: serde_json::Value = serde_json::from_slice(&cli.stderr).unwrap_or_default();
    let cli_name = stderr["invariant"].as_str().unwrap_or("").to_string();
    let named = lib == "unimodular_frames" && !cli.status.success() && cli_name == lib;
    outcome(
        11,
        "negative controls",
        rejected && named,
        format!(
            "s*t path discrepancy {:.2e} = {factor:.0}x tolerance (> 10x); corrupted frames: library invariant {lib:?}, \
             CLI exit {:?} invariant {cli_name:?}",
            check.discrepancy,
            cli.status.code()
        ),
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let results = vec![
        closure(dir.path()),
        bending_round_trip(),
        determinant_constants(),
        constant_bending_family(),
        permutability(),
        soliton_kdv_residual(),
        decay_bounds(),
        recon_validity(),
        lien_realization(),
        rigid_motion(),
        negative_controls(dir.path()),
    ];
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {tag}  {}: {}", r.id, r.name, r.detail);
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
