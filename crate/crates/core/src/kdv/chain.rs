use serde::{Deserialize, Serialize};

use super::frames::{extended_frame_field_constant, recon_frame, ExtendedFrameField};
use super::solution::{kdv_residual_values, KdvSolution, Soliton1, Soliton2};
use super::we::{backlund, we_function, WeField};
use super::STGrid;
use crate::curves::kappa_mn;
use crate::error::{Error, Result};

/// Two Bäcklund steps away from the constant solution `κ_{m,n}`:
/// `κ₀ → κ̃` at `λ_p`, then `κ̃ → κ̂` at `ω_{p,r}`.
#[derive(Debug, Clone)]
pub struct SolitonChain {
    pub m: i64,
    pub n: i64,
    pub p: f64,
    pub r: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub kappa0: f64,
    pub lambda_p: f64,
    pub omega_pr: f64,
    pub xi_lambda: f64,
    pub xi_omega: f64,
    pub stgrid: STGrid,
    /// Closed-form frame of `κ₀` at `λ_p`.
    pub e_lambda: ExtendedFrameField,
    /// WE function of `κ₀` at `λ_p` through `f(0,0) = c`.
    pub f: WeField,
    /// `κ̃` sampled from `f`.
    pub kappa1: KdvSolution,
    /// Normalized frame of `κ̃` at `ω_{p,r}`, rebuilt from the frame of `κ₀`.
    pub e_tilde_omega: ExtendedFrameField,
    /// WE function of `κ̃` at `ω_{p,r}` through `f̃(0,0) = c̃`.
    pub f_tilde: WeField,
    /// `κ̂` sampled from `f̃`.
    pub kappa2: KdvSolution,
}

/// `p + (m² + n²)/(m² − n²)`.
fn shifted(m: i64, n: i64, p: f64) -> Result<f64> {
    Ok(p - kappa_mn(m, n)?)
}

pub fn soliton_chain(m: i64, n: i64, p: f64, r: f64, c: f64, c_tilde: f64, stgrid: STGrid) -> Result<SolitonChain> {
    let kappa0 = kappa_mn(m, n)?;
    if !(p > 0.0) || !(r > 0.0) {
        return Err(Error::Domain(format!("need p > 0 and r > 0, got p = {p}, r = {r}")));
    }
    let lambda_p = shifted(m, n, p)?;
    let omega_pr = lambda_p + r;
    if lambda_p < 1.0 {
        return Err(Error::NoRealXi { name: "λ_p", value: lambda_p });
    }
    if omega_pr < 1.0 {
        return Err(Error::NoRealXi { name: "ω_pr", value: omega_pr });
    }
    let e_lambda = extended_frame_field_constant(kappa0, lambda_p, stgrid);
    let f = we_function(&e_lambda, 0.0, 0.0, c)?;
    let base = KdvSolution::Constant(kappa0);
    let kappa1 = backlund(&base, &f, lambda_p)?;
    let e_omega = extended_frame_field_constant(kappa0, omega_pr, stgrid);
    let e_tilde_omega = recon_frame(&e_omega, &f, lambda_p, omega_pr, true)?;
    let f_tilde = we_function(&e_tilde_omega, 0.0, 0.0, c_tilde)?;
    let kappa2 = backlund(&kappa1, &f_tilde, omega_pr)?;
    Ok(SolitonChain {
        m,
        n,
        p,
        r,
        c,
        c_tilde,
        kappa0,
        lambda_p,
        omega_pr,
        xi_lambda: 0.5 * lambda_p.acosh(),
        xi_omega: 0.5 * omega_pr.acosh(),
        stgrid,
        e_lambda,
        f,
        kappa1,
        e_tilde_omega,
        f_tilde,
        kappa2,
    })
}

impl SolitonChain {
    /// Closed-form evaluator of `κ̃`.
    pub fn soliton1(&self) -> Soliton1 {
        Soliton1 { kappa0: self.kappa0, lambda: self.lambda_p, c: self.c, s0: 0.0, t0: 0.0 }
    }

    /// Closed-form evaluator of `κ̂`.
    pub fn soliton2(&self) -> Soliton2 {
        Soliton2 { base: self.soliton1(), omega: self.omega_pr, c_tilde: self.c_tilde }
    }

    /// Max gaps between the sampled `κ̃`, `κ̂` and their closed forms at
    /// non-pole nodes.
    pub fn closed_form_gaps(&self) -> (f64, f64) {
        let gap = |sampled: &KdvSolution, exact: &KdvSolution| {
            let (a, pa) = sampled.sample(&self.stgrid);
            let (b, pb) = exact.sample(&self.stgrid);
            (0..a.len()).filter(|&k| !pa[k] && !pb[k]).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
        };
        (
            gap(&self.kappa1, &KdvSolution::Soliton1(self.soliton1())),
            gap(&self.kappa2, &KdvSolution::Soliton2(self.soliton2())),
        )
    }

    /// KdV residuals of the sampled `κ̃` and `κ̂` on the chain grid.
    pub fn kdv_residuals(&self) -> Result<(f64, f64)> {
        let res = |sol: &KdvSolution| {
            let (v, p) = sol.sample(&self.stgrid);
            kdv_residual_values(&v, &p, &self.stgrid)
        };
        Ok((res(&self.kappa1)?, res(&self.kappa2)?))
    }
}

/// The region outside which `|κ(s) − base| ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayWindow {
    pub left: f64,
    pub right: f64,
    pub base: f64,
    pub bound: f64,
    /// Max deviation sampled on `[−far, left] ∪ [right, far]`.
    pub max_outside: f64,
    pub far: f64,
}

impl DecayWindow {
    pub fn holds(&self) -> bool {
        self.max_outside <= self.bound
    }
}

/// Locate the window edges: scan inward from `±far` with step `scan` until
/// the deviation exceeds `bound`, then bisect the crossing.
pub fn decay_window(profile: impl Fn(f64) -> f64, base: f64, bound: f64, far: f64, scan: f64) -> Result<DecayWindow> {
    if !(bound > 0.0 && far > 0.0 && scan > 0.0) {
        return Err(Error::Domain(format!("need positive bound, far and scan, got {bound}, {far}, {scan}")));
    }
    let dev = |s: f64| (profile(s) - base).abs();
    let edge = |dir: f64| -> Result<f64> {
        let mut outer = dir * far;
        if !(dev(outer) <= bound) {
            return Err(Error::Invariant {
                name: "decay".into(),
                detail: format!("deviation {:e} at s = {outer} already exceeds {bound:e}", dev(outer)),
            });
        }
        let mut inner = outer - dir * scan;
        while dev(inner) <= bound {
            outer = inner;
            inner -= dir * scan;
            if inner * dir < 0.0 {
                return Ok(0.0);
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (inner + outer);
            if dev(mid) <= bound {
                outer = mid;
            } else {
                inner = mid;
            }
        }
        // widen slightly: the profile carries roundoff near the crossing
        Ok(outer + dir * 1e-6 * far)
    };
    let (left, right) = (edge(-1.0)?, edge(1.0)?);
    let k = 4000;
    let mut max_outside: f64 = 0.0;
    for i in 0..=k {
        let w = i as f64 / k as f64;
        max_outside = max_outside.max(dev(-far + w * (left + far))).max(dev(right + w * (far - right)));
    }
    Ok(DecayWindow { left, right, base, bound, max_outside, far })
}
