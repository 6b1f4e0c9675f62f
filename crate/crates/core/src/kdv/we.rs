use serde::{Deserialize, Serialize};

use super::frames::ExtendedFrameField;
use super::solution::{ratio_with_pole, KdvSolution};
use super::STGrid;
use crate::error::{Error, Result};
use crate::ttransform::{transformed_bending, DEFAULT_GUARD};

/// Transforming function `f = −x/y` with `(x, y) = E⁻¹·E(s0,t0)·(−c, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeField {
    pub lambda: f64,
    pub stgrid: STGrid,
    pub s0: f64,
    pub t0: f64,
    pub c: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub pole: Vec<bool>,
}

impl WeField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.f[self.stgrid.idx(i, j)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let a = self.stgrid.idx(0, j);
        &self.f[a..a + self.stgrid.ns()]
    }

    pub fn has_poles(&self) -> bool {
        self.pole.iter().any(|p| *p)
    }

    /// Max of `|f_s + f² − κ − λ|` on each `t`-slice.
    pub fn riccati_residual_by_slice(&self, sol: &KdvSolution) -> Vec<f64> {
        let g = self.stgrid;
        let near_pole = guard_mask(&self.pole, &g);
        (0..g.nt)
            .map(|j| {
                (1..g.ns() - 1)
                    .filter(|&i| !near_pole[g.idx(i, j)])
                    .map(|i| {
                        let fs = (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * g.hs());
                        let f = self.at(i, j);
                        (fs + f * f - sol.value(g.s(i), g.t(j)) - self.lambda).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Marks every node within `DEFAULT_GUARD` samples (in `s` or `t`) of a pole.
fn guard_mask(pole: &[bool], g: &STGrid) -> Vec<bool> {
    let mut out = vec![false; pole.len()];
    let (ns, nt) = (g.ns(), g.nt);
    for j in 0..nt {
        for i in 0..ns {
            if !pole[g.idx(i, j)] {
                continue;
            }
            for jj in j.saturating_sub(DEFAULT_GUARD)..(j + DEFAULT_GUARD + 1).min(nt) {
                for ii in i.saturating_sub(DEFAULT_GUARD)..(i + DEFAULT_GUARD + 1).min(ns) {
                    out[g.idx(ii, jj)] = true;
                }
            }
        }
    }
    out
}

/// WE function of the frame field through `f(s0, t0) = c`.
pub fn we_function(e: &ExtendedFrameField, s0: f64, t0: f64, c: f64) -> Result<WeField> {
    let g = e.stgrid;
    let (i0, j0) = g.index_of(s0, t0).ok_or(Error::OffGrid { s: s0, t: t0 })?;
    let v0 = e.at(i0, j0).mul_vec([-c, 1.0]);
    let n = g.len();
    let (mut x, mut y, mut f, mut pole) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for m in &e.e {
        let v = m.inv().mul_vec(v0);
        let (fv, p) = ratio_with_pole(v[0], v[1]);
        x.push(v[0]);
        y.push(v[1]);
        f.push(fv);
        pole.push(p || !fv.is_finite());
    }
    // the initial condition holds exactly
    let k0 = g.idx(i0, j0);
    f[k0] = c;
    Ok(WeField { lambda: e.lambda, stgrid: g, s0, t0, c, x, y, f, pole })
}

/// Which `t`-equation of the Wahlquist–Estabrook system to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeForm {
    /// `f_t = 4λ(f² − λ) − 2(f² + λ) + 2κ² + 2fκ_s − κ_ss`, as printed.
    Printed,
    /// `f_t = 4λ(f² − λ) − 2κ(f² + λ) + 2κ² + 2fκ_s − κ_ss`, obtained from
    /// `f = −x/y` and `dE = E·Γ_λ`.
    Derived,
}

impl WeForm {
    pub fn f_t(&self, f: f64, k: f64, ks: f64, kss: f64, lambda: f64) -> f64 {
        let coupling = match self {
            WeForm::Printed => 1.0,
            WeForm::Derived => k,
        };
        4.0 * lambda * (f * f - lambda) - 2.0 * coupling * (f * f + lambda) + 2.0 * k * k + 2.0 * f * ks - kss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeResidual {
    /// Max of `|f_s − (κ + λ − f²)|`.
    pub s_part: f64,
    /// Max of `|f_t − rhs|` for the chosen [`WeForm`].
    pub t_part: f64,
}

impl WeResidual {
    pub fn max(&self) -> f64 {
        self.s_part.max(self.t_part)
    }
}

/// Central-difference residual of the WE system at interior nodes away from poles.
pub fn we_residual(field: &WeField, sol: &KdvSolution, form: WeForm) -> Result<WeResidual> {
    let g = field.stgrid;
    let (ns, nt) = (g.ns(), g.nt);
    if ns < 3 || nt < 3 {
        return Err(Error::GridTooShort { need: 3, got: ns.min(nt) });
    }
    let near_pole = guard_mask(&field.pole, &g);
    let l = field.lambda;
    let mut out = WeResidual { s_part: 0.0, t_part: 0.0 };
    for j in 1..nt - 1 {
        for i in 1..ns - 1 {
            if near_pole[g.idx(i, j)] {
                continue;
            }
            let jet = sol.jet(g.s(i), g.t(j));
            if jet.pole {
                continue;
            }
            let f = field.at(i, j);
            let fs = (field.at(i + 1, j) - field.at(i - 1, j)) / (2.0 * g.hs());
            let ft = (field.at(i, j + 1) - field.at(i, j - 1)) / (2.0 * g.ht);
            out.s_part = out.s_part.max((fs - (jet.k + l - f * f)).abs());
            out.t_part = out.t_part.max((ft - form.f_t(f, jet.k, jet.ks, jet.kss, l)).abs());
        }
    }
    Ok(out)
}

/// `κ̃ = −κ + 2f² − 2λ` on the grid of `f`; poles of `f` carry over as flags.
pub fn backlund(sol: &KdvSolution, f: &WeField, lambda: f64) -> Result<KdvSolution> {
    if (f.lambda - lambda).abs() > 1e-12 * lambda.abs().max(1.0) {
        return Err(Error::SpectralMismatch { expected: lambda, got: f.lambda });
    }
    let g = f.stgrid;
    let jets = g.map(|s, t| sol.jet(s, t));
    let values = jets.iter().zip(&f.f).map(|(j, &fv)| transformed_bending(j.k, fv, lambda)).collect();
    let pole = jets.iter().zip(&f.pole).map(|(j, &p)| p || j.pole).collect();
    KdvSolution::sampled(g, values, Some(pole))
}
