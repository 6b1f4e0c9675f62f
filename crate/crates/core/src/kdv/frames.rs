use super::solution::{Jet, KdvSolution, EPS_MU};
use super::we::WeField;
use super::{r_matrix, STGrid};
use crate::error::{Error, Result};
use crate::sl2core::Mat2;

/// `K = [[0, κ+λ], [1, 0]]` and
/// `P = [[−κ_s, −κ_ss + 2κ² − 2λκ − 4λ²], [2κ − 4λ, κ_s]]`.
pub fn gamma_matrices(kappa: f64, dkappa: f64, d2kappa: f64, lambda: f64) -> (Mat2, Mat2) {
    let k = Mat2::new(0.0, kappa + lambda, 1.0, 0.0);
    let p = Mat2::new(
        -dkappa,
        -d2kappa + 2.0 * kappa * kappa - 2.0 * lambda * kappa - 4.0 * lambda * lambda,
        2.0 * kappa - 4.0 * lambda,
        dkappa,
    );
    (k, p)
}

fn gamma_of(jet: &Jet, lambda: f64) -> (Mat2, Mat2) {
    gamma_matrices(jet.k, jet.ks, jet.kss, lambda)
}

/// Closed-form extended frame `exp(φ·K)` of a constant solution, with
/// `φ = s + 2(κ − 2λ)t`; hyperbolic, trigonometric or series branch
/// according to the sign of `μ = κ + λ`.
pub fn extended_frame_constant(kappa: f64, lambda: f64, s: f64, t: f64) -> Mat2 {
    let mu = kappa + lambda;
    let phi = s + 2.0 * (kappa - 2.0 * lambda) * t;
    if mu > EPS_MU {
        let r = mu.sqrt();
        let (ch, sh) = ((r * phi).cosh(), (r * phi).sinh());
        Mat2::new(ch, r * sh, sh / r, ch)
    } else if mu < -EPS_MU {
        let r = (-mu).sqrt();
        let (c, s) = ((r * phi).cos(), (r * phi).sin());
        Mat2::new(c, -r * s, s / r, c)
    } else {
        // second-order series about the unipotent limit [[1, 0], [φ, 1]]
        let c = 1.0 + mu * phi * phi / 2.0;
        let sh = phi * (1.0 + mu * phi * phi / 6.0);
        Mat2::new(c, mu * sh, sh, c)
    }
}

/// Samples of an extended frame `E_λ` on an `(s, t)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedFrameField {
    pub lambda: f64,
    pub stgrid: STGrid,
    pub e: Vec<Mat2>,
    pub normalized_at_origin: bool,
}

impl ExtendedFrameField {
    pub fn at(&self, i: usize, j: usize) -> Mat2 {
        self.e[self.stgrid.idx(i, j)]
    }

    /// `t`-slice `j`.
    pub fn row(&self, j: usize) -> &[Mat2] {
        let a = self.stgrid.idx(0, j);
        &self.e[a..a + self.stgrid.ns()]
    }

    /// Max `|det E − 1|` over finite samples.
    pub fn max_det_defect(&self) -> f64 {
        self.e.iter().filter(|m| m.is_finite()).map(|m| (m.det() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Max `|det E − 1| / max(1, ‖E‖²)`, meaningful when the entries are large.
    pub fn max_relative_det_defect(&self) -> f64 {
        self.e
            .iter()
            .filter(|m| m.is_finite())
            .map(|m| (m.det() - 1.0).abs() / m.frob().powi(2).max(1.0))
            .fold(0.0, f64::max)
    }

    /// Left-multiply by `E(0,0)⁻¹`.
    pub fn normalized(mut self) -> Result<Self> {
        let (i0, j0) = self.stgrid.origin()?;
        let left = self.at(i0, j0).inv();
        for m in &mut self.e {
            *m = left * *m;
        }
        self.normalized_at_origin = true;
        Ok(self)
    }

    /// Frame from a closed-form solution (constant or soliton).
    pub fn from_closed_form(sol: &KdvSolution, lambda: f64, stgrid: STGrid) -> Result<Self> {
        if !sol.has_closed_form() {
            return Err(Error::Domain("sampled solutions have no closed-form frame".into()));
        }
        let e = stgrid.map(|s, t| sol.frame_at(lambda, s, t).unwrap_or(Mat2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN)));
        Ok(ExtendedFrameField { lambda, stgrid, e, normalized_at_origin: true })
    }
}

/// Closed-form frame field of a constant solution.
pub fn extended_frame_field_constant(kappa: f64, lambda: f64, stgrid: STGrid) -> ExtendedFrameField {
    let e = stgrid.map(|s, t| extended_frame_constant(kappa, lambda, s, t));
    ExtendedFrameField { lambda, stgrid, e, normalized_at_origin: true }
}

fn rk4_s(sol: &KdvSolution, lambda: f64, e: Mat2, s: f64, t: f64, h: f64) -> Mat2 {
    let k = |s: f64| gamma_of(&sol.jet(s, t), lambda).0;
    let (ka, kb, kc) = (k(s), k(s + 0.5 * h), k(s + h));
    rk4(e, ka, kb, kc, h)
}

fn rk4_t(sol: &KdvSolution, lambda: f64, e: Mat2, s: f64, t: f64, h: f64) -> Mat2 {
    let p = |t: f64| gamma_of(&sol.jet(s, t), lambda).1;
    let (pa, pb, pc) = (p(t), p(t + 0.5 * h), p(t + h));
    rk4(e, pa, pb, pc, h)
}

fn rk4(e: Mat2, a: Mat2, b: Mat2, c: Mat2, h: f64) -> Mat2 {
    let k1 = e * a;
    let k2 = (e + k1 * (0.5 * h)) * b;
    let k3 = (e + k2 * (0.5 * h)) * b;
    let k4 = (e + k3 * h) * c;
    let next = e + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    next.project_sl2().unwrap_or(next)
}

/// Integrate a line of samples outward from `start` in both directions.
fn sweep(n: usize, start: usize, e0: Mat2, mut step: impl FnMut(usize, Mat2, f64) -> Mat2, h: f64) -> Vec<Mat2> {
    let mut out = vec![Mat2::ZERO; n];
    out[start] = e0;
    for i in start..n - 1 {
        out[i + 1] = step(i, out[i], h);
    }
    for i in (1..=start).rev() {
        out[i - 1] = step(i, out[i], -h);
    }
    out
}

/// Both integration orders of `dE = E·Γ_λ` from `E(0,0) = Id`.
#[derive(Debug, Clone)]
pub struct PathCheck {
    /// `s` along `t = 0`, then `t` along every `s`-line.
    pub s_first: ExtendedFrameField,
    /// `t` along `s = 0`, then `s` along every `t`-line.
    pub t_first: ExtendedFrameField,
    /// Max of `‖E_a − E_b‖ / max(1, ‖E_a‖)` over the grid.
    pub discrepancy: f64,
    /// Discretization tolerance `hs² + ht²`.
    pub tolerance: f64,
}

impl PathCheck {
    /// Flatness holds unless the discrepancy exceeds ten times the tolerance.
    pub fn is_flat(&self) -> bool {
        self.discrepancy <= 10.0 * self.tolerance
    }
}

pub fn frame_path_check(sol: &KdvSolution, lambda: f64, stgrid: STGrid) -> Result<PathCheck> {
    let (i0, j0) = stgrid.origin()?;
    let (ns, nt) = (stgrid.ns(), stgrid.nt);
    let (hs, ht) = (stgrid.hs(), stgrid.ht);

    let mut a = vec![Mat2::ZERO; stgrid.len()];
    let row0 = sweep(ns, i0, Mat2::IDENTITY, |i, e, h| rk4_s(sol, lambda, e, stgrid.s(i), 0.0, h), hs);
    for i in 0..ns {
        let s = stgrid.s(i);
        let col = sweep(nt, j0, row0[i], |j, e, h| rk4_t(sol, lambda, e, s, stgrid.t(j), h), ht);
        for j in 0..nt {
            a[stgrid.idx(i, j)] = col[j];
        }
    }

    let mut b = vec![Mat2::ZERO; stgrid.len()];
    let col0 = sweep(nt, j0, Mat2::IDENTITY, |j, e, h| rk4_t(sol, lambda, e, 0.0, stgrid.t(j), h), ht);
    for j in 0..nt {
        let t = stgrid.t(j);
        let row = sweep(ns, i0, col0[j], |i, e, h| rk4_s(sol, lambda, e, stgrid.s(i), t, h), hs);
        b[stgrid.idx(0, j)..stgrid.idx(0, j) + ns].copy_from_slice(&row);
    }

    let discrepancy = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (*x - *y).frob() / x.frob().max(1.0))
        .fold(0.0, f64::max);
    let field = |e| ExtendedFrameField { lambda, stgrid, e, normalized_at_origin: true };
    Ok(PathCheck { s_first: field(a), t_first: field(b), discrepancy, tolerance: hs * hs + ht * ht })
}

/// RK4 integration of `dE = E·Γ_λ(κ)` with `E(0,0) = Id`; fails with
/// [`Error::NotKdv`] when the two integration orders disagree beyond ten
/// times the discretization tolerance.
pub fn extended_frame_numeric(sol: &KdvSolution, lambda: f64, stgrid: STGrid) -> Result<ExtendedFrameField> {
    let check = frame_path_check(sol, lambda, stgrid)?;
    if !check.is_flat() {
        return Err(Error::NotKdv { discrepancy: check.discrepancy, tolerance: check.tolerance });
    }
    Ok(check.s_first)
}

/// `(1/(ω−λ))·R(−f₀, λ, ω)·E_ω·R(−f, λ, ω)`, with `E_ω` a frame of `κ` at
/// `ω`, `f` the WE function at `λ` and `f₀` its value at the origin.
pub fn recon_matrix(e_omega: Mat2, f: f64, f0: f64, lambda: f64, omega: f64) -> Mat2 {
    r_matrix(-f0, lambda, omega) * e_omega * r_matrix(-f, lambda, omega) * (1.0 / (omega - lambda))
}

/// Extended frame at `ω` of the Bäcklund transform `κ̃ = −κ + 2f² − 2λ`,
/// built from the frame `E_ω` of `κ` at `ω` and the WE function `f` at `λ`.
pub fn recon_frame(e_omega: &ExtendedFrameField, f: &WeField, lambda: f64, omega: f64, normalize: bool) -> Result<ExtendedFrameField> {
    if omega == lambda {
        return Err(Error::SpectralCollision(omega));
    }
    if (e_omega.lambda - omega).abs() > 1e-12 * omega.abs().max(1.0) {
        return Err(Error::SpectralMismatch { expected: omega, got: e_omega.lambda });
    }
    if (f.lambda - lambda).abs() > 1e-12 * lambda.abs().max(1.0) {
        return Err(Error::SpectralMismatch { expected: lambda, got: f.lambda });
    }
    let g = e_omega.stgrid;
    if f.stgrid != g {
        return Err(Error::InvalidGrid("frame and WE function live on different grids".into()));
    }
    let (i0, j0) = g.origin()?;
    let k0 = g.idx(i0, j0);
    if f.pole[k0] {
        return Err(Error::PoleInRange { s: 0.0 });
    }
    let f0 = f.f[k0];
    let nan = Mat2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    let e = (0..g.len())
        .map(|k| if f.pole[k] { nan } else { recon_matrix(e_omega.e[k], f.f[k], f0, lambda, omega) })
        .collect();
    let out = ExtendedFrameField { lambda: omega, stgrid: g, e, normalized_at_origin: false };
    if normalize {
        out.normalized()
    } else {
        Ok(out)
    }
}

/// Max Frobenius norms of `E_s − E·K` and `E_t − E·P` at interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrameResidual {
    pub s_part: f64,
    pub t_part: f64,
}

impl FrameResidual {
    pub fn max(&self) -> f64 {
        self.s_part.max(self.t_part)
    }
}

/// Central-difference residual of `dE = E·Γ_λ(κ)`; nodes whose stencil
/// touches a pole are skipped.
pub fn frame_equation_residual(field: &ExtendedFrameField, sol: &KdvSolution) -> Result<FrameResidual> {
    let g = field.stgrid;
    let (ns, nt) = (g.ns(), g.nt);
    if ns < 3 || nt < 3 {
        return Err(Error::GridTooShort { need: 3, got: ns.min(nt) });
    }
    let (hs, ht) = (g.hs(), g.ht);
    let mut out = FrameResidual { s_part: 0.0, t_part: 0.0 };
    for j in 1..nt - 1 {
        for i in 1..ns - 1 {
            let jet = sol.jet(g.s(i), g.t(j));
            let e = field.at(i, j);
            let nb = [field.at(i - 1, j), field.at(i + 1, j), field.at(i, j - 1), field.at(i, j + 1)];
            if jet.pole || !e.is_finite() || nb.iter().any(|m| !m.is_finite()) {
                continue;
            }
            let (k, p) = gamma_of(&jet, field.lambda);
            let es = (nb[1] - nb[0]) * (0.5 / hs);
            let et = (nb[3] - nb[2]) * (0.5 / ht);
            out.s_part = out.s_part.max((es - e * k).frob());
            out.t_part = out.t_part.max((et - e * p).frob());
        }
    }
    Ok(out)
}
