use serde::{Deserialize, Serialize};

use super::frames::{extended_frame_numeric, ExtendedFrameField};
use super::solution::KdvSolution;
use super::we::WeField;
use super::STGrid;
use crate::curves::NullCurve;
use crate::error::{Error, Result};
use crate::fd;
use crate::sl2core::Mat2;
use crate::ttransform::{g_minus, g_plus, transformed_bending};

const NAN: Mat2 = Mat2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN);

/// A family of null curves `γ(s, t) = E₊·E₋⁻¹` with spinor frames `E±` and
/// bending `κ(s, t)`. Samples at poles are NaN and flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct LienField {
    pub stgrid: STGrid,
    pub gamma: Vec<Mat2>,
    pub e_plus: Vec<Mat2>,
    pub e_minus: Vec<Mat2>,
    pub kappa: Vec<f64>,
    pub pole: Vec<bool>,
}

impl LienField {
    fn assemble(stgrid: STGrid, e_plus: Vec<Mat2>, e_minus: Vec<Mat2>, kappa: Vec<f64>, pole: Vec<bool>) -> Self {
        let gamma = e_plus
            .iter()
            .zip(&e_minus)
            .zip(&pole)
            .map(|((p, m), &bad)| if bad { NAN } else { *p * m.adj() })
            .collect();
        LienField { stgrid, gamma, e_plus, e_minus, kappa, pole }
    }

    /// The `t`-slice `j` as a [`NullCurve`].
    pub fn slice_curve(&self, j: usize) -> Result<NullCurve> {
        let g = self.stgrid;
        if j >= g.nt {
            return Err(Error::InvalidGrid(format!("slice {j} out of range (nt = {})", g.nt)));
        }
        let r = g.idx(0, j)..g.idx(0, j) + g.ns();
        if let Some(i) = self.pole[r.clone()].iter().position(|p| *p) {
            return Err(Error::PoleInRange { s: g.s(i) });
        }
        NullCurve::from_frames(g.sgrid, self.e_plus[r.clone()].to_vec(), self.e_minus[r.clone()].to_vec(), self.kappa[r].to_vec())
    }

    pub fn residual(&self) -> Result<f64> {
        lien_residual(&self.gamma, &self.kappa, &self.stgrid)
    }
}

/// `γ = E₁·E₋₁⁻¹` from the extended frames of `κ` at `λ = ±1`; closed form
/// when available, otherwise RK4 with the flatness check.
pub fn lien_curve(sol: &KdvSolution, stgrid: STGrid) -> Result<LienField> {
    let frame = |l: f64| -> Result<ExtendedFrameField> {
        if sol.has_closed_form() {
            ExtendedFrameField::from_closed_form(sol, l, stgrid)
        } else {
            extended_frame_numeric(sol, l, stgrid)
        }
    };
    let (ep, em) = (frame(1.0)?, frame(-1.0)?);
    let (kappa, sol_pole) = sol.sample(&stgrid);
    let pole = (0..stgrid.len())
        .map(|k| sol_pole[k] || !ep.e[k].is_finite() || !em.e[k].is_finite())
        .collect();
    Ok(LienField::assemble(stgrid, ep.e, em.e, kappa, pole))
}

/// Max Frobenius norm of `γ_t − 2γ_sss + 6κγ_s` over interior nodes by
/// central differences; stencils touching a non-finite sample are skipped.
pub fn lien_residual(gamma: &[Mat2], kappa: &[f64], stgrid: &STGrid) -> Result<f64> {
    let g = stgrid;
    let (ns, nt) = (g.ns(), g.nt);
    if ns < 5 || nt < 3 {
        return Err(Error::GridTooShort { need: 5, got: ns.min(nt) });
    }
    for len in [gamma.len(), kappa.len()] {
        if len != g.len() {
            return Err(Error::LengthMismatch { left: g.len(), right: len });
        }
    }
    let (hs, ht) = (g.hs(), g.ht);
    let mut worst: f64 = 0.0;
    for j in 1..nt - 1 {
        let row = &gamma[g.idx(0, j)..g.idx(0, j) + ns];
        for i in 2..ns - 2 {
            let (up, down) = (gamma[g.idx(i, j + 1)], gamma[g.idx(i, j - 1)]);
            if !(row[i - 2..=i + 2].iter().all(Mat2::is_finite) && up.is_finite() && down.is_finite()) {
                continue;
            }
            let k = kappa[g.idx(i, j)];
            if !k.is_finite() {
                continue;
            }
            let gt = (up - down) * (0.5 / ht);
            let r = gt - fd::d3(row, i, hs) * 2.0 + fd::d1(row, i, hs) * (6.0 * k);
            worst = worst.max(r.frob());
        }
    }
    Ok(worst)
}

/// Pointwise T-transform of a LIEN flow: `E₊G₊(ξ, f)` and `±E₋G₋(ξ, f)`,
/// with bending `κ̃ = −κ + 2f² − 2λ`, `λ = cosh 2ξ`.
pub fn t_transform_flow(flow: &LienField, f: &WeField, xi: f64, sign: i8) -> Result<LienField> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    let lambda = (2.0 * xi).cosh();
    if (f.lambda - lambda).abs() > 1e-10 * lambda {
        return Err(Error::SpectralMismatch { expected: lambda, got: f.lambda });
    }
    if f.stgrid != flow.stgrid {
        return Err(Error::InvalidGrid("flow and WE function live on different grids".into()));
    }
    let e = if sign >= 0 { 1.0 } else { -1.0 };
    let n = flow.stgrid.len();
    let pole: Vec<bool> = (0..n).map(|k| flow.pole[k] || f.pole[k]).collect();
    let mut e_plus = Vec::with_capacity(n);
    let mut e_minus = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    for (k, &at_pole) in pole.iter().enumerate() {
        if at_pole {
            e_plus.push(NAN);
            e_minus.push(NAN);
            kappa.push(f64::NAN);
            continue;
        }
        let fv = f.f[k];
        e_plus.push(flow.e_plus[k] * g_plus(xi, fv));
        e_minus.push(flow.e_minus[k] * g_minus(xi, fv) * e);
        kappa.push(transformed_bending(flow.kappa[k], fv, lambda));
    }
    Ok(LienField::assemble(flow.stgrid, e_plus, e_minus, kappa, pole))
}

/// Travelling-wave fit of a sampled field: each `t`-slice is matched to a
/// shift of the `t = 0` slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidMotionReport {
    /// Least-squares slope of the fitted shifts against `t`.
    pub fitted_velocity: f64,
    pub expected_velocity: f64,
    /// Best shift per `t`-slice.
    pub shifts: Vec<f64>,
    /// Max `|κ(s, t) − κ(s − δ(t), 0)|` at the fitted shifts.
    pub max_mismatch: f64,
    /// Same with `δ(t) = v·t` for the expected velocity.
    pub max_mismatch_at_velocity: f64,
}

fn interp(row: &[f64], s0: f64, h: f64, s: f64) -> f64 {
    let (b, w) = fd::lagrange4_weights((s - s0) / h, row.len());
    (0..4).map(|k| w[k] * row[b + k]).sum()
}

/// Max over usable nodes of `|row(s) − ref(s − δ)|`, ignoring a margin of
/// two steps at the ends of the reference slice.
fn mismatch(row: &[f64], reference: &[f64], s0: f64, h: f64, delta: f64) -> f64 {
    let n = row.len();
    let (lo, hi) = (s0 + 2.0 * h, s0 + (n - 3) as f64 * h);
    (0..n)
        .filter_map(|i| {
            let s = s0 + i as f64 * h - delta;
            (s >= lo && s <= hi && row[i].is_finite()).then(|| (row[i] - interp(reference, s0, h, s)).abs())
        })
        .fold(0.0, f64::max)
}

/// Sum of squared differences, used for the shift search.
fn sq_mismatch(row: &[f64], reference: &[f64], s0: f64, h: f64, delta: f64) -> f64 {
    let n = row.len();
    let (lo, hi) = (s0 + 2.0 * h, s0 + (n - 3) as f64 * h);
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, &r) in row.iter().enumerate() {
        let s = s0 + i as f64 * h - delta;
        if s >= lo && s <= hi && r.is_finite() {
            sum += (r - interp(reference, s0, h, s)).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        f64::INFINITY
    } else {
        sum / count as f64
    }
}

/// Cross-correlation over integer shifts about the background level, then
/// golden-section refinement.
fn best_shift(row: &[f64], reference: &[f64], s0: f64, h: f64) -> f64 {
    let n = row.len() as isize;
    // the median tracks the background level; the mean would include the
    // wave and bias the correlation towards large overlaps
    let mut sorted: Vec<f64> = reference.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let base = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let (mr, mf) = (base, base);
    let mut best = (0isize, f64::NEG_INFINITY);
    for k in -(n / 2)..=(n / 2) {
        let mut c = 0.0;
        for i in 0..n {
            let i0 = i - k;
            if (0..n).contains(&i0) {
                c += (row[i as usize] - mr) * (reference[i0 as usize] - mf);
            }
        }
        if c > best.1 {
            best = (k, c);
        }
    }
    let (mut a, mut b) = ((best.0 as f64 - 1.0) * h, (best.0 as f64 + 1.0) * h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let cost = |d: f64| sq_mismatch(row, reference, s0, h, d);
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    while b - a > 1e-12 * h.max(1.0) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = cost(x2);
        }
    }
    0.5 * (a + b)
}

/// Fit `κ(s, t) ≈ κ(s − δ(t), 0)` slice by slice. The reference is the row
/// nearest `t = 0`.
pub fn rigid_motion_check(values: &[f64], stgrid: &STGrid, expected_velocity: f64) -> Result<RigidMotionReport> {
    let g = stgrid;
    if values.len() != g.len() {
        return Err(Error::LengthMismatch { left: g.len(), right: values.len() });
    }
    let j0 = g.tgrid().index_of(0.0).ok_or(Error::OffGrid { s: g.s(0), t: 0.0 })?;
    let row = |j: usize| &values[g.idx(0, j)..g.idx(0, j) + g.ns()];
    let reference = row(j0);
    let (s0, h) = (g.s(0), g.hs());
    let shifts: Vec<f64> = (0..g.nt).map(|j| if j == j0 { 0.0 } else { best_shift(row(j), reference, s0, h) }).collect();
    let ts: Vec<f64> = (0..g.nt).map(|j| g.t(j)).collect();
    let num: f64 = ts.iter().zip(&shifts).map(|(t, d)| t * d).sum();
    let den: f64 = ts.iter().map(|t| t * t).sum();
    let fitted_velocity = num / den;
    let mut max_mismatch: f64 = 0.0;
    let mut max_at_v: f64 = 0.0;
    for (j, &shift) in shifts.iter().enumerate() {
        max_mismatch = max_mismatch.max(mismatch(row(j), reference, s0, h, shift));
        max_at_v = max_at_v.max(mismatch(row(j), reference, s0, h, expected_velocity * g.t(j)));
    }
    Ok(RigidMotionReport { fitted_velocity, expected_velocity, shifts, max_mismatch, max_mismatch_at_velocity: max_at_v })
}
