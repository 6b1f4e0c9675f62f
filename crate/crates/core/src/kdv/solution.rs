use serde::{Deserialize, Serialize};

use super::frames::extended_frame_constant;
use super::{r_matrix, STGrid};
use crate::error::{Error, Result};
use crate::fd;
use crate::sl2core::Mat2;
use crate::ttransform::EPS_POLE;

/// Below this `|κ + λ|` the closed forms switch to their series.
pub(crate) const EPS_MU: f64 = 1e-10;

/// Value of `κ` and its first two `s`-derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub k: f64,
    pub ks: f64,
    pub kss: f64,
    /// True if the point sits on (or interpolates across) a pole.
    pub pole: bool,
}

impl Jet {
    pub fn regular(k: f64, ks: f64, kss: f64) -> Self {
        Jet { k, ks, kss, pole: false }
    }
}

/// `(x, y)` with `f = −x/y` for the WE function of a constant solution,
/// `(x, y) = exp(−D·K)·(−c, 1)` up to a positive factor, where `D` is the
/// phase difference and `K = [[0, μ], [1, 0]]`.
pub(crate) fn constant_lift(mu: f64, d: f64, c: f64) -> (f64, f64) {
    let (ch, sh) = if mu > EPS_MU {
        // divided by cosh to stay finite far from the origin
        let r = mu.sqrt();
        (1.0, (r * d).tanh() / r)
    } else if mu < -EPS_MU {
        let w = (-mu).sqrt();
        ((w * d).cos(), (w * d).sin() / w)
    } else {
        (1.0 + mu * d * d / 2.0, d * (1.0 + mu * d * d / 6.0))
    };
    (-c * ch - mu * sh, c * sh + ch)
}

pub(crate) fn ratio_with_pole(x: f64, y: f64) -> (f64, bool) {
    (-x / y, !(y.abs() >= EPS_POLE * x.abs().max(y.abs())))
}

/// First Bäcklund transform of the constant solution `κ₀`:
/// `κ̃ = −κ₀ + 2f² − 2λ` with `f` the WE function through `f(s0, t0) = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Soliton1 {
    pub kappa0: f64,
    pub lambda: f64,
    pub c: f64,
    pub s0: f64,
    pub t0: f64,
}

impl Soliton1 {
    pub fn mu(&self) -> f64 {
        self.kappa0 + self.lambda
    }

    /// `s + 2(κ₀ − 2λ)t`, the argument of the extended frame.
    pub fn phase(&self, s: f64, t: f64) -> f64 {
        s + 2.0 * (self.kappa0 - 2.0 * self.lambda) * t
    }

    /// Speed of the travelling wave `κ̃(s, t) = κ̃(s − vt, 0)`.
    pub fn velocity(&self) -> f64 {
        -2.0 * (self.kappa0 - 2.0 * self.lambda)
    }

    /// WE function `f` and its pole flag.
    pub fn f(&self, s: f64, t: f64) -> (f64, bool) {
        let d = self.phase(s, t) - self.phase(self.s0, self.t0);
        let (x, y) = constant_lift(self.mu(), d, self.c);
        ratio_with_pole(x, y)
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let (f, pole) = self.f(s, t);
        let fs = self.mu() - f * f;
        Jet {
            k: -self.kappa0 + 2.0 * f * f - 2.0 * self.lambda,
            ks: 4.0 * f * fs,
            kss: 4.0 * fs * fs - 8.0 * f * f * fs,
            pole,
        }
    }

    /// Extended frame of `κ̃` at spectral parameter `l`, normalized to `Id`
    /// at the origin.
    pub fn frame_at(&self, l: f64, s: f64, t: f64) -> Result<Mat2> {
        if l == self.lambda {
            return Err(Error::SpectralCollision(l));
        }
        let (f, pole) = self.f(s, t);
        let (f0, pole0) = self.f(0.0, 0.0);
        if pole || pole0 {
            return Err(Error::PoleInRange { s });
        }
        let e = extended_frame_constant(self.kappa0, l, s, t);
        Ok(r_matrix(-f0, self.lambda, l).adj() * e * r_matrix(-f, self.lambda, l) * (1.0 / (self.lambda - l)))
    }
}

/// Second Bäcklund transform `κ̂ = −κ̃ + 2f̃² − 2ω` on top of a [`Soliton1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Soliton2 {
    pub base: Soliton1,
    pub omega: f64,
    pub c_tilde: f64,
}

impl Soliton2 {
    /// WE function `f̃` of `κ̃` at `ω` through `f̃(s0, t0) = c̃`.
    pub fn f_tilde(&self, s: f64, t: f64) -> (f64, bool) {
        let b = &self.base;
        let (f, pole) = b.f(s, t);
        let (f0, pole0) = b.f(b.s0, b.t0);
        if pole || pole0 {
            return (f64::NAN, true);
        }
        let a = r_matrix(-f, b.lambda, self.omega);
        let bm = r_matrix(-f0, b.lambda, self.omega);
        let phi = extended_frame_constant(b.kappa0, self.omega, b.s0 - s, b.t0 - t);
        let v = (a.adj() * phi * bm).mul_vec([-self.c_tilde, 1.0]);
        let scale = v[0].abs().max(v[1].abs());
        ratio_with_pole(v[0] / scale, v[1] / scale)
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let j1 = self.base.jet(s, t);
        let (g, pole) = self.f_tilde(s, t);
        let gs = j1.k + self.omega - g * g;
        let gss = j1.ks - 2.0 * g * gs;
        Jet {
            k: -j1.k + 2.0 * g * g - 2.0 * self.omega,
            ks: -j1.ks + 4.0 * g * gs,
            kss: -j1.kss + 4.0 * gs * gs + 4.0 * g * gss,
            pole: pole || j1.pole,
        }
    }

    pub fn frame_at(&self, l: f64, s: f64, t: f64) -> Result<Mat2> {
        if l == self.omega {
            return Err(Error::SpectralCollision(l));
        }
        let e = self.base.frame_at(l, s, t)?;
        let (g, pole) = self.f_tilde(s, t);
        let (g0, pole0) = self.f_tilde(0.0, 0.0);
        if pole || pole0 {
            return Err(Error::PoleInRange { s });
        }
        Ok(r_matrix(-g0, self.omega, l).adj() * e * r_matrix(-g, self.omega, l) * (1.0 / (self.omega - l)))
    }
}

/// A solution `κ(s, t)` of `κ_t + κ_sss − 6κκ_s = 0`, or a candidate for one.
#[derive(Debug, Clone, PartialEq)]
pub enum KdvSolution {
    Constant(f64),
    Soliton1(Soliton1),
    Soliton2(Soliton2),
    Sampled(Sampled),
}

/// Grid samples with pole flags; off-grid values use bicubic interpolation
/// of `κ` and of its central-difference `s`-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub stgrid: STGrid,
    pub values: Vec<f64>,
    pub pole: Vec<bool>,
    ks: Vec<f64>,
    kss: Vec<f64>,
}

impl KdvSolution {
    pub fn sampled(stgrid: STGrid, values: Vec<f64>, pole: Option<Vec<bool>>) -> Result<Self> {
        if values.len() != stgrid.len() {
            return Err(Error::LengthMismatch { left: stgrid.len(), right: values.len() });
        }
        let pole = pole.unwrap_or_else(|| values.iter().map(|v| !v.is_finite()).collect());
        if pole.len() != values.len() {
            return Err(Error::LengthMismatch { left: values.len(), right: pole.len() });
        }
        let ns = stgrid.ns();
        let h = stgrid.hs();
        let mut ks = Vec::with_capacity(values.len());
        let mut kss = Vec::with_capacity(values.len());
        for row in values.chunks(ns) {
            ks.extend((0..ns).map(|i| fd::d1_any(row, i, h)));
            kss.extend((0..ns).map(|i| fd::d2_any(row, i, h)));
        }
        Ok(KdvSolution::Sampled(Sampled { stgrid, values, pole, ks, kss }))
    }

    /// Sample an arbitrary function of `(s, t)` on a grid.
    pub fn from_fn(stgrid: STGrid, f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        KdvSolution::sampled(stgrid, stgrid.map(f), None)
    }

    pub fn describe(&self) -> String {
        match self {
            KdvSolution::Constant(k) => format!("constant({k})"),
            KdvSolution::Soliton1(s) => format!("soliton1(kappa0 = {}, lambda = {}, c = {})", s.kappa0, s.lambda, s.c),
            KdvSolution::Soliton2(s) => format!(
                "soliton2(kappa0 = {}, lambda = {}, omega = {}, c = {}, c_tilde = {})",
                s.base.kappa0, s.base.lambda, s.omega, s.base.c, s.c_tilde
            ),
            KdvSolution::Sampled(s) => format!("sampled({} x {})", s.stgrid.ns(), s.stgrid.nt),
        }
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        match self {
            KdvSolution::Constant(k) => Jet::regular(*k, 0.0, 0.0),
            KdvSolution::Soliton1(x) => x.jet(s, t),
            KdvSolution::Soliton2(x) => x.jet(s, t),
            KdvSolution::Sampled(x) => x.jet(s, t),
        }
    }

    pub fn value(&self, s: f64, t: f64) -> f64 {
        self.jet(s, t).k
    }

    /// Values and pole flags on every node of `stgrid`.
    pub fn sample(&self, stgrid: &STGrid) -> (Vec<f64>, Vec<bool>) {
        let jets = stgrid.map(|s, t| self.jet(s, t));
        (jets.iter().map(|j| j.k).collect(), jets.iter().map(|j| j.pole).collect())
    }

    /// Closed-form extended frame at `l`, normalized at the origin.
    pub fn frame_at(&self, l: f64, s: f64, t: f64) -> Result<Mat2> {
        match self {
            KdvSolution::Constant(k) => Ok(extended_frame_constant(*k, l, s, t)),
            KdvSolution::Soliton1(x) => x.frame_at(l, s, t),
            KdvSolution::Soliton2(x) => x.frame_at(l, s, t),
            KdvSolution::Sampled(_) => Err(Error::Domain("sampled solutions have no closed-form frame".into())),
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self, KdvSolution::Sampled(_))
    }
}

impl Sampled {
    fn jet(&self, s: f64, t: f64) -> Jet {
        let g = &self.stgrid;
        if let Some((i, j)) = g.index_of(s, t) {
            let k = g.idx(i, j);
            return Jet { k: self.values[k], ks: self.ks[k], kss: self.kss[k], pole: self.pole[k] };
        }
        let (bi, wi) = fd::lagrange4_weights((s - g.s(0)) / g.hs(), g.ns());
        let (bj, wj) = fd::lagrange4_weights((t - g.t0) / g.ht, g.nt);
        let mut out = Jet::regular(0.0, 0.0, 0.0);
        for (a, wa) in wj.iter().enumerate() {
            for (b, wb) in wi.iter().enumerate() {
                let k = g.idx(bi + b, bj + a);
                let w = wa * wb;
                out.k += w * self.values[k];
                out.ks += w * self.ks[k];
                out.kss += w * self.kss[k];
                out.pole |= self.pole[k];
            }
        }
        out
    }
}

/// Max of `|κ_t + κ_sss − 6κκ_s|` over interior nodes by central differences.
pub fn kdv_residual(sol: &KdvSolution, stgrid: &STGrid) -> Result<f64> {
    let (values, pole) = sol.sample(stgrid);
    kdv_residual_values(&values, &pole, stgrid)
}

/// As [`kdv_residual`] for stored samples; stencils touching a pole are skipped.
pub fn kdv_residual_values(values: &[f64], pole: &[bool], g: &STGrid) -> Result<f64> {
    let (ns, nt) = (g.ns(), g.nt);
    if ns < 5 {
        return Err(Error::GridTooShort { need: 5, got: ns });
    }
    if values.len() != g.len() {
        return Err(Error::LengthMismatch { left: g.len(), right: values.len() });
    }
    let (hs, ht) = (g.hs(), g.ht);
    let mut worst: f64 = 0.0;
    for j in 1..nt - 1 {
        let row = &values[g.idx(0, j)..g.idx(0, j) + ns];
        for i in 2..ns - 2 {
            let touched = (i - 2..=i + 2).any(|a| pole[g.idx(a, j)]) || pole[g.idx(i, j - 1)] || pole[g.idx(i, j + 1)];
            if touched {
                continue;
            }
            let kt = (values[g.idx(i, j + 1)] - values[g.idx(i, j - 1)]) / (2.0 * ht);
            let r = kt + fd::d3(row, i, hs) - 6.0 * row[i] * fd::d1(row, i, hs);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::kappa_mn;

    fn sol1() -> Soliton1 {
        let k = kappa_mn(4, 1).unwrap();
        Soliton1 { kappa0: k, lambda: 1.4 - k, c: 0.0, s0: 0.0, t0: 0.0 }
    }

    #[test]
    fn soliton1_profile_is_sech_squared() {
        let s1 = sol1();
        let mu = 1.4_f64;
        for &(s, t) in &[(0.0, 0.0), (0.7, 0.1), (-3.0, 0.2), (12.0, -0.4)] {
            let sigma = mu.sqrt() * s1.phase(s, t);
            let want = s1.kappa0 - 2.0 * mu / sigma.cosh().powi(2);
            assert!((s1.jet(s, t).k - want).abs() < 1e-12);
        }
        assert!((s1.velocity() - 12.4).abs() < 1e-12);
    }

    #[test]
    fn soliton1_derivatives_match_differences() {
        let s1 = sol1();
        let h = 1e-4;
        for &(s, t) in &[(0.3, 0.05), (-1.1, 0.0)] {
            let j = s1.jet(s, t);
            let ks = (s1.jet(s + h, t).k - s1.jet(s - h, t).k) / (2.0 * h);
            let kss = (s1.jet(s + h, t).ks - s1.jet(s - h, t).ks) / (2.0 * h);
            assert!((j.ks - ks).abs() < 1e-6);
            assert!((j.kss - kss).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_solution_has_zero_residual() {
        let g = STGrid::covering((-1.0, 1.0), (-0.1, 0.1), 0.05, 0.01).unwrap();
        assert_eq!(kdv_residual(&KdvSolution::Constant(-1.3), &g).unwrap(), 0.0);
    }

    #[test]
    fn soliton_residuals_converge() {
        let s1 = sol1();
        let s2 = Soliton2 { base: s1, omega: s1.lambda + 1.0, c_tilde: 0.0 };
        for sol in [KdvSolution::Soliton1(s1), KdvSolution::Soliton2(s2)] {
            let g = STGrid::covering((-4.0, 4.0), (-0.1, 0.1), 0.04, 0.005).unwrap();
            let a = kdv_residual(&sol, &g).unwrap();
            let b = kdv_residual(&sol, &g.refined()).unwrap();
            assert!((a / b - 4.0).abs() < 0.5, "{} {a} {b}", sol.describe());
        }
    }

    #[test]
    fn non_kdv_input_has_large_residual() {
        let g = STGrid::covering((-1.0, 1.0), (-0.5, 0.5), 0.05, 0.05).unwrap();
        let sol = KdvSolution::from_fn(g, |s, t| s * t).unwrap();
        assert!(kdv_residual(&sol, &g).unwrap() > 0.5);
    }

    #[test]
    fn sampled_interpolation() {
        let g = STGrid::covering((-1.0, 1.0), (0.0, 0.4), 0.05, 0.05).unwrap();
        let sol = KdvSolution::from_fn(g, |s, t| s * s * s + t * s).unwrap();
        let j = sol.jet(0.3123, 0.1777);
        assert!((j.k - (0.3123f64.powi(3) + 0.1777 * 0.3123)).abs() < 1e-12);
        assert!((j.ks - (3.0 * 0.3123f64.powi(2) + 0.1777)).abs() < 1e-2);
    }

    #[test]
    fn soliton2_initial_condition() {
        let s1 = Soliton1 { c: 0.2, ..sol1() };
        let s2 = Soliton2 { base: s1, omega: s1.lambda + 1.0, c_tilde: -0.3 };
        assert!((s2.f_tilde(0.0, 0.0).0 + 0.3).abs() < 1e-14);
        assert!((s1.f(0.0, 0.0).0 - 0.2).abs() < 1e-14);
    }
}
