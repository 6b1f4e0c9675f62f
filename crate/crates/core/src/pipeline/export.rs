//! CSV writers and readers plus the JSON sidecar written next to every CSV.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`; pole flags are `0`/`1`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::torus::torus_embed;
use crate::curves::{NullCurve, SGrid};
use crate::error::{Error, Result};
use crate::kdv::{LienField, STGrid};
use crate::sl2core::Mat2;

pub const CURVE_COLUMNS: [&str; 6] = ["s", "g11", "g12", "g21", "g22", "kappa"];
pub const FRAMES_COLUMNS: [&str; 9] = ["s", "fp11", "fp12", "fp21", "fp22", "fm11", "fm12", "fm21", "fm22"];
pub const TORUS_COLUMNS: [&str; 4] = ["s", "x", "y", "z"];
pub const FIELD_COLUMNS: [&str; 4] = ["s", "t", "value", "pole_flag"];
pub const FLOW_COLUMNS: [&str; 8] = ["s", "t", "g11", "g12", "g21", "g22", "kappa", "pole_flag"];
pub const FLOW_FRAMES_COLUMNS: [&str; 11] =
    ["s", "t", "fp11", "fp12", "fp21", "fp22", "fm11", "fm12", "fm21", "fm22", "pole_flag"];
pub const FLOW_TORUS_COLUMNS: [&str; 5] = ["s", "t", "x", "y", "z"];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(p: bool) -> String {
    if p { "1" } else { "0" }.to_string()
}

fn mat(m: &Mat2) -> [String; 4] {
    m.to_array().map(num)
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// `s, g11, g12, g21, g22, kappa`.
pub fn write_curve_csv(path: &Path, curve: &NullCurve) -> Result<()> {
    write_rows(
        path,
        &CURVE_COLUMNS,
        (0..curve.len()).map(|i| {
            let mut r = vec![num(curve.grid.s(i))];
            r.extend(mat(&curve.gamma[i]));
            r.push(num(curve.kappa[i]));
            r
        }),
    )
}

/// `s` and the entries of `F₊`, `F₋` in row-major order.
pub fn write_frames_csv(path: &Path, curve: &NullCurve) -> Result<()> {
    write_rows(
        path,
        &FRAMES_COLUMNS,
        (0..curve.len()).map(|i| {
            let mut r = vec![num(curve.grid.s(i))];
            r.extend(mat(&curve.fplus[i]));
            r.extend(mat(&curve.fminus[i]));
            r
        }),
    )
}

/// `s, x, y, z` of the torus chart of `γ`.
pub fn write_torus_csv(path: &Path, s: &[f64], gamma: &[Mat2]) -> Result<()> {
    let rows = s
        .iter()
        .zip(gamma)
        .map(|(s, g)| {
            let p = torus_embed(g)?;
            Ok(vec![num(*s), num(p.x), num(p.y), num(p.z)])
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(path, &TORUS_COLUMNS, rows.into_iter())
}

/// `s, t, value, pole_flag` in grid storage order (`t` outer).
pub fn write_field_csv(path: &Path, g: &STGrid, values: &[f64], pole: &[bool]) -> Result<()> {
    if values.len() != g.len() || pole.len() != g.len() {
        return Err(Error::LengthMismatch { left: g.len(), right: values.len().min(pole.len()) });
    }
    write_rows(
        path,
        &FIELD_COLUMNS,
        (0..g.len()).map(|k| {
            let (i, j) = (k % g.ns(), k / g.ns());
            vec![num(g.s(i)), num(g.t(j)), num(values[k]), flag(pole[k])]
        }),
    )
}

/// A one-dimensional profile in the field schema at fixed `t`.
pub fn write_profile_csv(path: &Path, s: &[f64], t: f64, values: &[f64], pole: &[bool]) -> Result<()> {
    write_rows(
        path,
        &FIELD_COLUMNS,
        (0..s.len()).map(|i| vec![num(s[i]), num(t), num(values[i]), flag(pole[i])]),
    )
}

/// `γ(s, t)`, its frames and its torus image, one row per node.
pub fn write_flow_csvs(dir: &Path, stem: &str, flow: &LienField) -> Result<Vec<PathBuf>> {
    let g = flow.stgrid;
    let st = |k: usize| [num(g.s(k % g.ns())), num(g.t(k / g.ns()))];
    let curve = dir.join(format!("{stem}.csv"));
    write_rows(
        &curve,
        &FLOW_COLUMNS,
        (0..g.len()).map(|k| {
            let mut r = st(k).to_vec();
            r.extend(mat(&flow.gamma[k]));
            r.push(num(flow.kappa[k]));
            r.push(flag(flow.pole[k]));
            r
        }),
    )?;
    let frames = dir.join(format!("{stem}_frames.csv"));
    write_rows(
        &frames,
        &FLOW_FRAMES_COLUMNS,
        (0..g.len()).map(|k| {
            let mut r = st(k).to_vec();
            r.extend(mat(&flow.e_plus[k]));
            r.extend(mat(&flow.e_minus[k]));
            r.push(flag(flow.pole[k]));
            r
        }),
    )?;
    let torus = dir.join(format!("{stem}_torus.csv"));
    let rows = (0..g.len())
        .filter(|&k| !flow.pole[k])
        .map(|k| {
            let p = torus_embed(&flow.gamma[k])?;
            let mut r = st(k).to_vec();
            r.extend([num(p.x), num(p.y), num(p.z)]);
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(&torus, &FLOW_TORUS_COLUMNS, rows.into_iter())?;
    Ok(vec![curve, frames, torus])
}

fn read_table(path: &Path, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != expected {
        return Err(Error::Config(format!(
            "{}: expected columns {expected:?}, found {header:?}",
            path.display()
        )));
    }
    r.records()
        .enumerate()
        .map(|(line, rec)| {
            rec?.iter()
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("{}: bad number '{x}' in data row {}", path.display(), line + 1))
                    })
                })
                .collect()
        })
        .collect()
}

/// Uniform grid through the sample positions, or an error naming the first
/// irregular step.
pub fn grid_from_samples(s: &[f64]) -> Result<SGrid> {
    if s.len() < 2 {
        return Err(Error::GridTooShort { need: 2, got: s.len() });
    }
    let h = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
    for (i, w) in s.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(Error::InvalidGrid(format!("non-uniform step at row {i}: {} vs {h}", w[1] - w[0])));
        }
    }
    SGrid::new(s[0], h, s.len())
}

/// Positions, curve samples and bending from a curve CSV.
pub fn read_curve_csv(path: &Path) -> Result<(Vec<f64>, Vec<Mat2>, Vec<f64>)> {
    let rows = read_table(path, &CURVE_COLUMNS)?;
    Ok((
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| Mat2::new(r[1], r[2], r[3], r[4])).collect(),
        rows.iter().map(|r| r[5]).collect(),
    ))
}

/// Positions and frames `(F₊, F₋)` from a frames CSV.
pub fn read_frames_csv(path: &Path) -> Result<(Vec<f64>, Vec<Mat2>, Vec<Mat2>)> {
    let rows = read_table(path, &FRAMES_COLUMNS)?;
    Ok((
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| Mat2::new(r[1], r[2], r[3], r[4])).collect(),
        rows.iter().map(|r| Mat2::new(r[5], r[6], r[7], r[8])).collect(),
    ))
}

/// One tolerance outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, tolerance: threshold, passed: value >= threshold }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, passed: ok }
    }
}

/// Contents of `<file>.json`, written next to each CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub file: String,
    pub columns: Vec<String>,
    pub config_hash: String,
    /// The resolved configuration section, defaults included.
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub report: serde_json::Value,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn write_sidecar(csv: &Path, sidecar: &Sidecar) -> Result<PathBuf> {
    let path = sidecar_path(csv);
    std::fs::write(&path, serde_json::to_string_pretty(sidecar)? + "\n")?;
    Ok(path)
}

/// Column names of a CSV header line.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.headers()?.iter().map(str::to_string).collect())
}
