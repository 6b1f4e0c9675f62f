//! The subcommands behind the `adsnull` binary.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::*;
use super::export::*;
use crate::curves::{
    closure_period, integrate_spinor_frames, torus_knot_type, verify_null_geometry, NullCurve, SGrid,
};
use crate::error::{Error, Result};
use crate::kdv::{
    decay_window, lien_curve, soliton_chain, KdvSolution, STGrid, Soliton1, Soliton2, SolitonChain,
};
use crate::sl2core::Mat2;
use crate::ttransform::{
    constant_bending_chi, constant_bending_transform, double_transform, permute, solve_riccati, t_transform,
    t_transform_segmented, TTransformResult, TransformKind,
};

/// What a subcommand produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub subcommand: String,
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub report: serde_json::Value,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Write a sidecar for every CSV in `csvs` and collect all paths.
fn finish<C: Serialize>(
    subcommand: &str,
    cfg: &C,
    csvs: Vec<PathBuf>,
    checks: Vec<Check>,
    report: serde_json::Value,
) -> Result<RunOutput> {
    let config_hash = config_hash(cfg)?;
    let config = serde_json::to_value(cfg)?;
    let mut files = Vec::with_capacity(2 * csvs.len());
    for csv in csvs {
        let sidecar = Sidecar {
            tool: "adsnull".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            file: csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            columns: read_header(&csv)?,
            config_hash: config_hash.clone(),
            config: config.clone(),
            checks: checks.clone(),
            report: report.clone(),
        };
        let side = write_sidecar(&csv, &sidecar)?;
        files.push(csv);
        files.push(side);
    }
    Ok(RunOutput { subcommand: subcommand.into(), config_hash, files, checks, report })
}

fn write_curve_set(dir: &Path, stem: &str, curve: &NullCurve) -> Result<Vec<PathBuf>> {
    let names = [format!("{stem}.csv"), format!("{stem}_frames.csv"), format!("{stem}_torus.csv")];
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).collect();
    write_curve_csv(&paths[0], curve)?;
    write_frames_csv(&paths[1], curve)?;
    write_torus_csv(&paths[2], &curve.grid.points(), &curve.gamma)?;
    Ok(paths)
}

fn curve_for(profile: &str, s0: f64, length: Option<f64>, h: f64) -> Result<(ProfileSpec, NullCurve)> {
    let spec = ProfileSpec::parse(profile)?;
    let length = match length {
        Some(l) => l,
        None => spec.default_length()?,
    };
    let grid = SGrid::covering(s0, s0 + length, h)?;
    let curve = integrate_spinor_frames(&spec.profile()?, grid, Mat2::IDENTITY, Mat2::IDENTITY)?;
    Ok((spec, curve))
}

/// Bending → curve, frames and torus CSVs plus the geometry report.
pub fn run_frenet(cfg: &FrenetConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (spec, curve) = curve_for(&cfg.profile, cfg.s0, cfg.length, cfg.h)?;
    let geometry = verify_null_geometry(&curve)?;
    let mut checks = vec![Check::flag("future_directed", geometry.future_directed)];
    let mut report = json!({
        "profile": cfg.profile,
        "length": curve.grid.end() - curve.grid.s0,
        "samples": curve.len(),
        "h": curve.grid.h,
        "geometry": geometry,
    });
    // with an explicit length the bending need not give a closed curve
    let period = spec.profile()?.as_constant().filter(|k| *k < -1.0).map(|k| closure_period(k, 10_000));
    let period = if cfg.length.is_some() { period.and_then(|p| p.ok()) } else { period.transpose()? };
    if let Some(period) = period {
        let gap = (curve.gamma[curve.len() - 1] - curve.gamma[0]).frob();
        report["closure_period"] = json!(period);
        report["closure_gap"] = json!(gap);
        if cfg.length.is_none() {
            checks.push(Check::at_most("closure", gap, cfg.closure_tol));
        }
    }
    if let ProfileSpec::Mn(m, n) = spec {
        report["knot_type"] = json!(torus_knot_type(m, n)?);
    }
    let csvs = write_curve_set(&cfg.out_dir, "curve", &curve)?;
    finish("frenet", cfg, csvs, checks, report)
}

fn transform_checks(t: &TTransformResult, det_tol: f64, chi_tol: f64, label: &str) -> Vec<Check> {
    let mut checks = vec![
        Check::at_most(&format!("{label}det_plus_constant"), t.det_plus.max_deviation, det_tol),
        Check::at_most(&format!("{label}det_minus_constant"), t.det_minus.max_deviation, det_tol),
    ];
    match t.kind {
        TransformKind::Riccati { xi, .. } => {
            let want_p = 1.0 / (std::f64::consts::SQRT_2 * xi.sinh());
            let want_m = 1.0 / (std::f64::consts::SQRT_2 * xi.cosh());
            checks.push(Check::at_most(&format!("{label}det_plus_value"), (t.det_plus.mean - want_p).abs(), det_tol));
            checks.push(Check::at_most(&format!("{label}det_minus_value"), (t.det_minus.mean - want_m).abs(), det_tol));
            checks.push(Check::at_most(&format!("{label}chi_zero"), t.chi.max_deviation.max(t.chi.mean.abs()), chi_tol));
        }
        TransformKind::ConstantBending { c_plus, c_minus, f_plus, f_minus, .. } => {
            let want = constant_bending_chi(f_plus, f_minus, c_plus, c_minus);
            let gap = (t.chi.mean - want).abs() + t.chi.max_deviation;
            checks.push(Check::at_most(&format!("{label}chi_value"), gap, chi_tol));
        }
    }
    checks
}

fn transform_report(t: &TTransformResult) -> serde_json::Value {
    json!({
        "kind": t.kind,
        "det_plus": t.det_plus,
        "det_minus": t.det_minus,
        "chi": t.chi,
        "triangle_areas": t.triangle_areas(),
    })
}

/// Curve + Riccati data → transformed curve with determinant and χ report.
pub fn run_ttransform(cfg: &TTransformConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (spec, curve) = curve_for(&cfg.profile, cfg.s0, cfg.length, cfg.h)?;
    let dir = &cfg.out_dir;
    if let (Some(cp), Some(cm)) = (cfg.c_plus, cfg.c_minus) {
        let k = spec
            .profile()?
            .as_constant()
            .ok_or_else(|| Error::Config("c_plus/c_minus need a constant profile".into()))?;
        let t = constant_bending_transform(k, &curve, cp, cm, 1, 1)?;
        let geometry = verify_null_geometry(&t.curve)?;
        let mut checks = transform_checks(&t, cfg.det_tol, cfg.chi_tol, "");
        checks.push(Check::at_most("bending_recovered", geometry.max_bending_defect, 1e-3));
        let mut csvs = write_curve_set(dir, "curve", &curve)?;
        csvs.extend(write_curve_set(dir, "transformed", &t.curve)?);
        let mut report = transform_report(&t);
        report["geometry"] = json!(geometry);
        return finish("ttransform", cfg, csvs, checks, report);
    }

    let profile = spec.profile()?;
    let sol = solve_riccati(&profile, curve.grid, cfg.xi, cfg.riccati_s0.unwrap_or(cfg.s0), cfg.c)?;
    let mut csvs = write_curve_set(dir, "curve", &curve)?;
    let f_path = dir.join("riccati.csv");
    write_profile_csv(&f_path, &curve.grid.points(), 0.0, &sol.f, &sol.pole)?;
    csvs.push(f_path);
    let poles = sol.pole_locations();
    if poles.is_empty() || !cfg.segmented {
        let t = t_transform(&curve, &sol, cfg.sign)?;
        let checks = transform_checks(&t, cfg.det_tol, cfg.chi_tol, "");
        csvs.extend(write_curve_set(dir, "transformed", &t.curve)?);
        return finish("ttransform", cfg, csvs, checks, transform_report(&t));
    }
    let pieces = t_transform_segmented(&curve, &sol, cfg.sign, cfg.guard)?;
    let mut checks = Vec::new();
    let mut segments = Vec::new();
    for (k, (range, t)) in pieces.iter().enumerate() {
        checks.extend(transform_checks(t, cfg.det_tol, cfg.chi_tol, &format!("segment{k}_")));
        csvs.extend(write_curve_set(dir, &format!("transformed_segment{k}"), &t.curve)?);
        segments.push(json!({ "start": curve.grid.s(range.start), "end": curve.grid.s(range.end - 1), "transform": transform_report(t) }));
    }
    finish("ttransform", cfg, csvs, checks, json!({ "poles": poles, "segments": segments }))
}

/// Two transforms of one curve → both double transforms and their gap.
pub fn run_permute(cfg: &PermuteConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (spec, curve) = curve_for(&cfg.profile, cfg.s0, Some(cfg.length), cfg.h)?;
    let profile = spec.profile()?;
    let sol1 = solve_riccati(&profile, curve.grid, cfg.xi1, cfg.s0, cfg.c1)?;
    let sol2 = solve_riccati(&profile, curve.grid, cfg.xi2, cfg.s0, cfg.c2)?;
    let perm = permute(&profile, curve.grid, &sol1, &sol2)?;
    let dt = double_transform(&curve, &perm)?;
    let checks = vec![
        Check::at_most("double_transforms_agree", dt.max_discrepancy, cfg.tol),
        Check::at_most("g_identity", dt.g_identity_residual, cfg.g_tol),
    ];
    let report = json!({
        "max_discrepancy": dt.max_discrepancy,
        "g_identity_residual": dt.g_identity_residual,
        "riccati_residual_21": perm.riccati_residual_21,
        "riccati_residual_12": perm.riccati_residual_12,
        "bending_route_gap": perm.bending_route_gap,
    });
    let mut csvs = write_curve_set(&cfg.out_dir, "curve", &curve)?;
    csvs.extend(write_curve_set(&cfg.out_dir, "double_via_first", &dt.via_first.curve)?);
    csvs.extend(write_curve_set(&cfg.out_dir, "double_via_second", &dt.via_second.curve)?);
    finish("permute", cfg, csvs, checks, report)
}

/// The `t = 0` row of a field.
fn row_at_zero(g: &STGrid, values: &[f64], pole: &[bool]) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let (_, j0) = g.origin()?;
    let r = g.idx(0, j0)..g.idx(0, j0) + g.ns();
    Ok((g.sgrid.points(), values[r.clone()].to_vec(), pole[r].to_vec()))
}

/// Build the soliton chain and its closed-form decay windows.
pub fn soliton_from_config(cfg: &SolitonConfig) -> Result<(SolitonChain, STGrid)> {
    cfg.validate()?;
    let g = STGrid::covering((cfg.s_min, cfg.s_max), (cfg.t_min, cfg.t_max), cfg.hs, cfg.ht)?;
    Ok((soliton_chain(cfg.m, cfg.n, cfg.p, cfg.r, cfg.c, cfg.c_tilde, g)?, g))
}

/// Soliton chain → κ̃, κ̂, f, f̃ fields, their `t = 0` profiles and decay tables.
pub fn run_soliton(cfg: &SolitonConfig) -> Result<RunOutput> {
    let (chain, g) = soliton_from_config(cfg)?;
    let dir = &cfg.out_dir;
    let mut csvs = Vec::new();
    let (k1, p1) = chain.kappa1.sample(&g);
    let (k2, p2) = chain.kappa2.sample(&g);
    for (name, v, p) in [
        ("kappa1", &k1, &p1),
        ("kappa2", &k2, &p2),
        ("f", &chain.f.f, &chain.f.pole),
        ("f_tilde", &chain.f_tilde.f, &chain.f_tilde.pole),
    ] {
        let path = dir.join(format!("{name}.csv"));
        write_field_csv(&path, &g, v, p)?;
        csvs.push(path);
        let (s, v0, p0) = row_at_zero(&g, v, p)?;
        let path = dir.join(format!("{name}_t0.csv"));
        write_profile_csv(&path, &s, 0.0, &v0, &p0)?;
        csvs.push(path);
    }

    let (s1, s2) = (chain.soliton1(), chain.soliton2());
    let k0 = chain.kappa0;
    let w1 = decay_window(|s| s1.jet(s, 0.0).k, k0, cfg.decay_bound1, cfg.decay_far, cfg.decay_scan)?;
    let w2 = decay_window(|s| s2.jet(s, 0.0).k, k0, cfg.decay_bound2, cfg.decay_far, cfg.decay_scan)?;
    let table = SGrid::covering(-cfg.decay_far, cfg.decay_far, cfg.decay_scan)?.points();
    for (name, dev) in [
        ("decay1", table.iter().map(|&s| (s1.jet(s, 0.0).k - k0).abs()).collect::<Vec<_>>()),
        ("decay2", table.iter().map(|&s| (s2.jet(s, 0.0).k - k0).abs()).collect::<Vec<_>>()),
    ] {
        let path = dir.join(format!("{name}.csv"));
        write_profile_csv(&path, &table, 0.0, &dev, &vec![false; table.len()])?;
        csvs.push(path);
    }

    let (r1, r2) = chain.kdv_residuals()?;
    let (gap1, gap2) = chain.closed_form_gaps();
    let checks = vec![
        Check::at_most("decay_kappa1", w1.max_outside, w1.bound),
        Check::at_most("decay_kappa2", w2.max_outside, w2.bound),
        Check::at_most("closed_form_kappa1", gap1, 1e-8),
        Check::at_most("closed_form_kappa2", gap2, 1e-8),
    ];
    let report = json!({
        "m": chain.m, "n": chain.n, "p": chain.p, "r": chain.r,
        "c": chain.c, "c_tilde": chain.c_tilde,
        "kappa0": k0,
        "lambda_p": chain.lambda_p, "omega_pr": chain.omega_pr,
        "xi_lambda": chain.xi_lambda, "xi_omega": chain.xi_omega,
        "velocity1": s1.velocity(),
        "kdv_residual_kappa1": r1, "kdv_residual_kappa2": r2,
        "recon_det_defect": chain.e_tilde_omega.max_det_defect(),
        "recon_relative_det_defect": chain.e_tilde_omega.max_relative_det_defect(),
        "decay_window_kappa1": w1, "decay_window_kappa2": w2,
    });
    finish("soliton", cfg, csvs, checks, report)
}

pub fn lien_solution(cfg: &LienConfig) -> Result<KdvSolution> {
    let k0 = crate::curves::kappa_mn(cfg.m, cfg.n)?;
    let s1 = Soliton1 { kappa0: k0, lambda: cfg.p - k0, c: cfg.c, s0: 0.0, t0: 0.0 };
    Ok(match cfg.solution.as_str() {
        "constant" => KdvSolution::Constant(k0),
        "soliton1" => KdvSolution::Soliton1(s1),
        _ => KdvSolution::Soliton2(Soliton2 { base: s1, omega: s1.lambda + cfg.r, c_tilde: cfg.c_tilde }),
    })
}

/// KdV solution → LIEN flow `γ(s, t)` with frames and torus images.
pub fn run_lien(cfg: &LienConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let sol = lien_solution(cfg)?;
    let g = STGrid::covering((cfg.s_min, cfg.s_max), (cfg.t_min, cfg.t_max), cfg.hs, cfg.ht)?;
    let flow = lien_curve(&sol, g)?;
    let residual = flow.residual()?;
    let mut worst_bending: f64 = 0.0;
    let mut future = true;
    for j in 0..g.nt {
        let r = verify_null_geometry(&flow.slice_curve(j)?)?;
        worst_bending = worst_bending.max(r.max_bending_defect);
        future &= r.future_directed;
    }
    let checks = vec![
        Check::at_most("slice_bending", worst_bending, cfg.bending_tol),
        Check::flag("future_directed", future),
    ];
    let report = json!({
        "solution": sol.describe(),
        "lien_residual": residual,
        "max_slice_bending_defect": worst_bending,
        "ns": g.ns(), "nt": g.nt,
    });
    let csvs = write_flow_csvs(&cfg.out_dir, "flow", &flow)?;
    finish("lien", cfg, csvs, checks, report)
}

/// Invariant checks on stored curve and/or frame files. Fails with
/// [`Error::Invariant`] naming the first violated check.
pub fn run_verify(cfg: &VerifyConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let det_gap = |v: &[Mat2]| v.iter().map(|m| (m.det() - 1.0).abs()).fold(0.0, |a: f64, b| a.max(if b.is_nan() { f64::INFINITY } else { b }));
    let frames = cfg.frames.as_deref().map(read_frames_csv).transpose()?;
    let curve = cfg.curve.as_deref().map(read_curve_csv).transpose()?;
    if let Some((_, fp, fm)) = &frames {
        checks.push(Check::at_most("unimodular_frames", det_gap(fp).max(det_gap(fm)), cfg.det_tol));
    }
    if let Some((_, g, _)) = &curve {
        checks.push(Check::at_most("unimodular_curve", det_gap(g), cfg.det_tol));
    }
    if let (Some((sf, fp, fm)), Some((sc, g, _))) = (&frames, &curve) {
        if sf.len() != sc.len() {
            return Err(Error::LengthMismatch { left: sf.len(), right: sc.len() });
        }
        let gap = (0..g.len())
            .map(|i| (fp[i] * fm[i].adj() - g[i]).frob() / g[i].frob().max(1.0))
            .fold(0.0, f64::max);
        checks.push(Check::at_most("curve_matches_frames", gap, 1e-12));
    }
    let (s, gamma, kappa, fplus, fminus) = match (&curve, &frames) {
        (Some((s, g, k)), fr) => {
            let (fp, fm) = fr.as_ref().map(|(_, a, b)| (a.clone(), b.clone())).unwrap_or_default();
            (s.clone(), g.clone(), Some(k.clone()), fp, fm)
        }
        (None, Some((s, fp, fm))) => (s.clone(), fp.iter().zip(fm).map(|(p, m)| *p * m.adj()).collect(), None, fp.clone(), fm.clone()),
        (None, None) => unreachable!("validated above"),
    };
    let grid = grid_from_samples(&s)?;
    let n = grid.n;
    let nc = NullCurve { grid, gamma, fplus, fminus, kappa: kappa.clone().unwrap_or_else(|| vec![0.0; n]) };
    let geometry = verify_null_geometry(&nc)?;
    checks.push(Check::at_most("null", geometry.max_null_defect, cfg.null_tol));
    checks.push(Check::at_most("proper_time", geometry.max_proper_time_defect, cfg.proper_time_tol));
    if kappa.is_some() {
        checks.push(Check::at_most("bending", geometry.max_bending_defect, cfg.bending_tol));
    }
    checks.push(Check::at_least("no_inflection", geometry.min_inflection_norm, f64::MIN_POSITIVE));
    checks.push(Check::flag("future_directed", geometry.future_directed));
    if let Some(bad) = checks.iter().find(|c| !c.passed) {
        return Err(Error::Invariant {
            name: bad.name.clone(),
            detail: format!("value {:e} vs tolerance {:e}", bad.value, bad.tolerance),
        });
    }
    let report = json!({ "samples": n, "h": grid.h, "geometry": geometry });
    Ok(RunOutput { subcommand: "verify".into(), config_hash: config_hash(cfg)?, files: Vec::new(), checks, report })
}

/// Frames CSV → torus CSV.
pub fn run_export_torus(cfg: &ExportTorusConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (frames, out) = (cfg.frames.as_deref().unwrap_or(Path::new("")), cfg.out.clone().unwrap_or_default());
    let (s, fp, fm) = read_frames_csv(frames)?;
    let gamma: Vec<Mat2> = fp.iter().zip(&fm).map(|(p, m)| *p * m.adj()).collect();
    write_torus_csv(&out, &s, &gamma)?;
    finish("export-torus", cfg, vec![out], Vec::new(), json!({ "samples": s.len() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frenet_writes_schemas_and_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FrenetConfig { h: 1e-2, out_dir: dir.path().into(), ..Default::default() };
        let out = run_frenet(&cfg).unwrap();
        assert_eq!(out.files.len(), 6);
        assert_eq!(read_header(&dir.path().join("curve.csv")).unwrap(), CURVE_COLUMNS);
        assert_eq!(read_header(&dir.path().join("curve_torus.csv")).unwrap(), TORUS_COLUMNS);
        let side: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("curve.csv.json")).unwrap()).unwrap();
        assert_eq!(side.config_hash, config_hash(&cfg).unwrap());
        assert_eq!(out.report["knot_type"], json!([2, 5]));
        assert!(out.check("closure").unwrap().passed);
    }

    #[test]
    fn runs_are_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&a, &b] {
            run_frenet(&FrenetConfig { profile: "sine".into(), h: 1e-2, out_dir: d.path().into(), ..Default::default() }).unwrap();
        }
        for f in ["curve.csv", "curve_frames.csv", "curve_torus.csv"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn verify_accepts_and_rejects() {
        let dir = tempfile::tempdir().unwrap();
        run_frenet(&FrenetConfig { h: 1e-3, out_dir: dir.path().into(), ..Default::default() }).unwrap();
        let frames = dir.path().join("curve_frames.csv");
        let cfg = VerifyConfig { curve: Some(dir.path().join("curve.csv")), frames: Some(frames.clone()), ..Default::default() };
        assert!(run_verify(&cfg).unwrap().passed());

        let (s, mut fp, fm) = read_frames_csv(&frames).unwrap();
        fp[10] = fp[10] * 1.01;
        let grid = grid_from_samples(&s).unwrap();
        let n = grid.n;
        let bad = NullCurve { grid, gamma: vec![Mat2::IDENTITY; n], fplus: fp, fminus: fm, kappa: vec![0.0; n] };
        let corrupted = dir.path().join("bad_frames.csv");
        write_frames_csv(&corrupted, &bad).unwrap();
        let err = run_verify(&VerifyConfig { frames: Some(corrupted), ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Invariant { ref name, .. } if name == "unimodular_frames"), "{err}");
    }

    #[test]
    fn export_torus_from_frames() {
        let dir = tempfile::tempdir().unwrap();
        run_frenet(&FrenetConfig { h: 1e-2, out_dir: dir.path().into(), ..Default::default() }).unwrap();
        let out = dir.path().join("t.csv");
        run_export_torus(&ExportTorusConfig { frames: Some(dir.path().join("curve_frames.csv")), out: Some(out.clone()) }).unwrap();
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(dir.path().join("curve_torus.csv")).unwrap());
    }
}
