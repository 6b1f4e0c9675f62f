//! T-transforms of null curves: Riccati solutions through their linear
//! lift, the χ invariant, the χ = 0 transform, the constant-bending χ ≠ 0
//! family and the permutability construction.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::curves::{BendingProfile, NullCurve, SGrid};
use crate::error::{Error, Result};
use crate::fd;
use crate::sl2core::{det2, sl2_exp, Mat2, Vec2};

/// Relative threshold on `|y|` below which a sample is flagged as a pole.
pub const EPS_POLE: f64 = 1e-8;
/// Samples excluded on each side of a pole when segmenting.
pub const DEFAULT_GUARD: usize = 3;
/// `f₁ = f₂` coincidence threshold in [`permute`].
const EPS_COINCIDE: f64 = 1e-10;

/// `κ̃ = −κ + 2f² − 2λ`.
pub fn transformed_bending(kappa: f64, f: f64, lambda: f64) -> f64 {
    -kappa + 2.0 * f * f - 2.0 * lambda
}

/// Solution `f = −x/y` of `f′ + f² = κ + cosh 2ξ`, stored through its lift.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub xi: f64,
    pub lambda: f64,
    pub grid: SGrid,
    pub s0: f64,
    pub c: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub pole: Vec<bool>,
    /// For constant profiles: max relative gap between the closed form and RK4.
    pub crosscheck: Option<f64>,
}

impl RiccatiSolution {
    /// Wrap known values of `f` (lift `x = −f`, `y = 1`).
    pub fn from_values(xi: f64, grid: SGrid, f: Vec<f64>) -> Result<Self> {
        if xi == 0.0 {
            return Err(Error::ZeroXi);
        }
        if f.len() != grid.n {
            return Err(Error::LengthMismatch { left: grid.n, right: f.len() });
        }
        let pole = f.iter().map(|v| !v.is_finite()).collect();
        Ok(RiccatiSolution {
            xi,
            lambda: (2.0 * xi).cosh(),
            grid,
            s0: grid.s0,
            c: f[0],
            x: f.iter().map(|v| -v).collect(),
            y: vec![1.0; f.len()],
            f,
            pole,
            crosscheck: None,
        })
    }

    fn from_lift(xi: f64, grid: SGrid, s0: f64, c: f64, lift: Vec<Vec2>) -> Self {
        let x: Vec<f64> = lift.iter().map(|v| v[0]).collect();
        let y: Vec<f64> = lift.iter().map(|v| v[1]).collect();
        let f = x.iter().zip(&y).map(|(x, y)| -x / y).collect();
        let pole = x.iter().zip(&y).map(|(x, y)| y.abs() < EPS_POLE * x.abs().max(y.abs())).collect();
        RiccatiSolution { xi, lambda: (2.0 * xi).cosh(), grid, s0, c, x, y, f, pole, crosscheck: None }
    }

    /// Index pairs `(i, i+1)` between which `y` changes sign.
    fn sign_changes(&self) -> Vec<usize> {
        (0..self.y.len().saturating_sub(1)).filter(|&i| self.y[i] * self.y[i + 1] < 0.0).collect()
    }

    /// Estimated zeros of `y` (flagged samples and linear interpolation of
    /// sign changes), in increasing order.
    pub fn pole_locations(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .pole
            .iter()
            .enumerate()
            .filter(|(_, p)| **p)
            .map(|(i, _)| self.grid.s(i))
            .collect();
        for i in self.sign_changes() {
            let (a, b) = (self.y[i], self.y[i + 1]);
            out.push(self.grid.s(i) + self.grid.h * a / (a - b));
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < self.grid.h);
        out
    }

    pub fn is_pole_free(&self) -> bool {
        !self.pole.iter().any(|p| *p) && self.sign_changes().is_empty()
    }

    /// Maximal runs of at least four samples staying `guard` samples away
    /// from every pole.
    pub fn segments(&self, guard: usize) -> Vec<Range<usize>> {
        let n = self.f.len();
        let mut bad = self.pole.clone();
        for i in self.sign_changes() {
            bad[i] = true;
            bad[i + 1] = true;
        }
        let mut keep = vec![true; n];
        for i in (0..n).filter(|&i| bad[i]) {
            for k in keep.iter_mut().take((i + guard + 1).min(n)).skip(i.saturating_sub(guard)) {
                *k = false;
            }
        }
        runs(&keep).into_iter().filter(|r| r.len() >= 4).collect()
    }

    /// Max of `|f′ + f² − κ − λ|` at interior samples of the pole-free segments.
    pub fn riccati_residual(&self, profile: &BendingProfile) -> f64 {
        let h = self.grid.h;
        let mut worst: f64 = 0.0;
        for seg in self.segments(DEFAULT_GUARD) {
            let f = &self.f[seg.clone()];
            for j in 1..f.len() - 1 {
                let s = self.grid.s(seg.start + j);
                let r = fd::d1(f, j, h) + f[j] * f[j] - profile.value(s) - self.lambda;
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

fn runs(keep: &[bool]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, k) in keep.iter().enumerate() {
        match (k, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                out.push(a..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        out.push(a..keep.len());
    }
    out
}

/// Lift generator `[[0, −(κ+λ)], [−1, 0]]`.
fn lift_generator(kappa: f64, lambda: f64) -> Mat2 {
    Mat2::new(0.0, -(kappa + lambda), -1.0, 0.0)
}

fn lift_rk4(profile: &BendingProfile, lambda: f64, v: Vec2, s: f64, h: f64) -> Vec2 {
    let a = |s: f64, v: Vec2| lift_generator(profile.value(s), lambda).mul_vec(v);
    let add = |v: Vec2, k: Vec2, t: f64| [v[0] + t * k[0], v[1] + t * k[1]];
    let k1 = a(s, v);
    let k2 = a(s + 0.5 * h, add(v, k1, 0.5 * h));
    let k3 = a(s + 0.5 * h, add(v, k2, 0.5 * h));
    let k4 = a(s + h, add(v, k3, h));
    [
        v[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        v[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// RK4 integration of the lift over the grid from an arbitrary `s0` inside it.
fn integrate_lift(profile: &BendingProfile, grid: SGrid, lambda: f64, s0: f64, v0: Vec2) -> Vec<Vec2> {
    let n = grid.n;
    let h = grid.h;
    let mut v = vec![[0.0; 2]; n];
    let (lo, hi) = match grid.index_of(s0) {
        Some(i) => {
            v[i] = v0;
            (i, i)
        }
        None => {
            let lo = (((s0 - grid.s0) / h).floor() as usize).min(n - 2);
            v[lo] = lift_rk4(profile, lambda, v0, s0, grid.s(lo) - s0);
            v[lo + 1] = lift_rk4(profile, lambda, v0, s0, grid.s(lo + 1) - s0);
            (lo, lo + 1)
        }
    };
    for i in hi..n - 1 {
        v[i + 1] = lift_rk4(profile, lambda, v[i], grid.s(i), h);
    }
    for i in (1..=lo).rev() {
        v[i - 1] = lift_rk4(profile, lambda, v[i], grid.s(i), -h);
    }
    v
}

/// Solve `f′ + f² = κ + cosh 2ξ`, `f(s0) = c`, through the lift
/// `x′ = −(κ+λ)y`, `y′ = −x`, `(x, y)(s0) = (−c, 1)`.
///
/// Constant profiles use the exact exponential and record the RK4 gap in
/// [`RiccatiSolution::crosscheck`].
pub fn solve_riccati(profile: &BendingProfile, grid: SGrid, xi: f64, s0: f64, c: f64) -> Result<RiccatiSolution> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    if !grid.contains(s0) {
        return Err(Error::InvalidGrid(format!("initial point s0 = {s0} outside [{}, {}]", grid.s0, grid.end())));
    }
    let lambda = (2.0 * xi).cosh();
    let v0 = [-c, 1.0];
    let rk = integrate_lift(profile, grid, lambda, s0, v0);
    if let Some(k) = profile.as_constant() {
        let gen = lift_generator(k, lambda);
        let exact: Vec<Vec2> = (0..grid.n)
            .map(|i| sl2_exp(&(gen * (grid.s(i) - s0))).map(|e| e.mul_vec(v0)))
            .collect::<Result<_>>()?;
        let gap = exact
            .iter()
            .zip(&rk)
            .map(|(a, b)| {
                let scale = a[0].abs().max(a[1].abs()).max(1.0);
                (a[0] - b[0]).abs().max((a[1] - b[1]).abs()) / scale
            })
            .fold(0.0, f64::max);
        let mut sol = RiccatiSolution::from_lift(xi, grid, s0, c, exact);
        sol.crosscheck = Some(gap);
        Ok(sol)
    } else {
        Ok(RiccatiSolution::from_lift(xi, grid, s0, c, rk))
    }
}

/// Mean of a sequence and its largest deviation from the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constancy {
    pub mean: f64,
    pub max_deviation: f64,
}

impl Constancy {
    pub fn of(values: &[f64]) -> Constancy {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max_deviation = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        Constancy { mean, max_deviation }
    }
}

/// Sign regime `2 + c₊² − c₋²` of a constant-bending transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BendingBranch {
    Positive,
    Zero,
    /// Handled by analogy with the positive case; not separately verified.
    Negative,
}

impl BendingBranch {
    pub fn classify(c_plus: f64, c_minus: f64) -> Self {
        let d = 2.0 + c_plus * c_plus - c_minus * c_minus;
        if d.abs() <= 1e-12 {
            BendingBranch::Zero
        } else if d > 0.0 {
            BendingBranch::Positive
        } else {
            BendingBranch::Negative
        }
    }

    pub fn verified(&self) -> bool {
        !matches!(self, BendingBranch::Negative)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransformKind {
    Riccati { xi: f64, lambda: f64, sign: i8 },
    ConstantBending { c_plus: f64, c_minus: f64, f_plus: f64, f_minus: f64, branch: BendingBranch },
}

#[derive(Debug, Clone)]
pub struct TTransformResult {
    /// The transformed curve `γ̃` with frames `F̃±` and bending `κ̃`.
    pub curve: NullCurve,
    pub xi: Option<f64>,
    pub kind: TransformKind,
    pub chi: Constancy,
    pub kappa_tilde: Vec<f64>,
    /// Transforming function on the output grid (empty for constant bending).
    pub f: Vec<f64>,
    /// `det(η₊, η̃₊)` along the curve.
    pub det_plus: Constancy,
    /// `det(η₋, η̃₋)` along the curve.
    pub det_minus: Constancy,
}

impl TTransformResult {
    /// `(1/2)|det(η, η̃)|`, the area of the triangle `0, η(s), η̃(s)`.
    pub fn triangle_areas(&self) -> (f64, f64) {
        (0.5 * self.det_plus.mean.abs(), 0.5 * self.det_minus.mean.abs())
    }
}

/// `G₊(ξ, φ) = [[−φ, φ² − 2sinh²ξ], [1, −φ]] / (√2 sinh ξ)`.
pub fn g_plus(xi: f64, phi: f64) -> Mat2 {
    let sh = xi.sinh();
    Mat2::new(-phi, phi * phi - 2.0 * sh * sh, 1.0, -phi) * (1.0 / (std::f64::consts::SQRT_2 * sh))
}

/// `G₋(ξ, φ) = [[−φ, φ² − 2cosh²ξ], [1, −φ]] / (√2 cosh ξ)`.
pub fn g_minus(xi: f64, phi: f64) -> Mat2 {
    let ch = xi.cosh();
    Mat2::new(-phi, phi * phi - 2.0 * ch * ch, 1.0, -phi) * (1.0 / (std::f64::consts::SQRT_2 * ch))
}

fn check_same_grid(a: &SGrid, b: &SGrid) -> Result<()> {
    if a.n != b.n {
        return Err(Error::LengthMismatch { left: a.n, right: b.n });
    }
    if (a.s0 - b.s0).abs() > 1e-9 * a.h || (a.h - b.h).abs() > 1e-12 * a.h {
        return Err(Error::InvalidGrid("curve and Riccati solution live on different grids".into()));
    }
    Ok(())
}

fn det_series(a: &[Vec2], b: &[Vec2]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| det2(*u, *v)).collect()
}

/// `det(η₊,η̃₊)·det(η₋,η̃₋′) − det(η₋,η̃₋)·det(η₊,η̃₊′)` per sample, with the
/// derivatives of `η̃±` given.
pub fn chi_series(eta_p: &[Vec2], eta_tp: &[Vec2], deta_tp: &[Vec2], eta_m: &[Vec2], eta_tm: &[Vec2], deta_tm: &[Vec2]) -> Vec<f64> {
    (0..eta_p.len())
        .map(|i| {
            det2(eta_p[i], eta_tp[i]) * det2(eta_m[i], deta_tm[i]) - det2(eta_m[i], eta_tm[i]) * det2(eta_p[i], deta_tp[i])
        })
        .collect()
}

/// The χ invariant with `η̃±′` from central differences (interior samples).
pub fn chi_invariant(eta_p: &[Vec2], eta_tp: &[Vec2], eta_m: &[Vec2], eta_tm: &[Vec2], grid: SGrid) -> Result<Constancy> {
    let n = grid.n;
    for len in [eta_p.len(), eta_tp.len(), eta_m.len(), eta_tm.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    if n < 3 {
        return Err(Error::GridTooShort { need: 3, got: n });
    }
    let diff = |v: &[Vec2]| -> Vec<Vec2> {
        let x: Vec<f64> = v.iter().map(|e| e[0]).collect();
        let y: Vec<f64> = v.iter().map(|e| e[1]).collect();
        (1..n - 1).map(|i| [fd::d1(&x, i, grid.h), fd::d1(&y, i, grid.h)]).collect()
    };
    let inner = 1..n - 1;
    let series = chi_series(
        &eta_p[inner.clone()],
        &eta_tp[inner.clone()],
        &diff(eta_tp),
        &eta_m[inner.clone()],
        &eta_tm[inner],
        &diff(eta_tm),
    );
    Ok(Constancy::of(&series))
}

/// χ computed with the analytic derivatives (second frame columns).
pub fn chi_from_frames(curve: &NullCurve, tilde: &NullCurve) -> Constancy {
    let col1 = |v: &[Mat2]| v.iter().map(Mat2::col1).collect::<Vec<_>>();
    let col2 = |v: &[Mat2]| v.iter().map(Mat2::col2).collect::<Vec<_>>();
    Constancy::of(&chi_series(
        &col1(&curve.fplus),
        &col1(&tilde.fplus),
        &col2(&tilde.fplus),
        &col1(&curve.fminus),
        &col1(&tilde.fminus),
        &col2(&tilde.fminus),
    ))
}

fn assemble(curve: &NullCurve, fplus: Vec<Mat2>, fminus: Vec<Mat2>, kappa_tilde: Vec<f64>) -> Result<(NullCurve, Constancy, Constancy, Constancy)> {
    let tilde = NullCurve::from_frames(curve.grid, fplus, fminus, kappa_tilde)?;
    let col1 = |v: &[Mat2]| v.iter().map(Mat2::col1).collect::<Vec<_>>();
    let dp = Constancy::of(&det_series(&col1(&curve.fplus), &col1(&tilde.fplus)));
    let dm = Constancy::of(&det_series(&col1(&curve.fminus), &col1(&tilde.fminus)));
    let chi = chi_from_frames(curve, &tilde);
    Ok((tilde, dp, dm, chi))
}

/// The χ = 0 T-transform `γ̃ = F₊G₊(ξ,f)·(±F₋G₋(ξ,f))⁻¹`.
///
/// Fails with [`Error::PoleInRange`] if `f` has a pole on the grid; see
/// [`t_transform_segmented`].
pub fn t_transform(curve: &NullCurve, sol: &RiccatiSolution, sign: i8) -> Result<TTransformResult> {
    check_same_grid(&curve.grid, &sol.grid)?;
    if let Some(&s) = sol.pole_locations().first() {
        return Err(Error::PoleInRange { s });
    }
    transform_pole_free(curve, sol.xi, &sol.f, sign)
}

fn transform_pole_free(curve: &NullCurve, xi: f64, f: &[f64], sign: i8) -> Result<TTransformResult> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    let lambda = (2.0 * xi).cosh();
    let e = if sign >= 0 { 1.0 } else { -1.0 };
    let fplus = curve.fplus.iter().zip(f).map(|(fp, &f)| *fp * g_plus(xi, f)).collect();
    let fminus = curve.fminus.iter().zip(f).map(|(fm, &f)| *fm * g_minus(xi, f) * e).collect();
    let kappa_tilde: Vec<f64> = curve.kappa.iter().zip(f).map(|(&k, &f)| transformed_bending(k, f, lambda)).collect();
    let (tilde, det_plus, det_minus, chi) = assemble(curve, fplus, fminus, kappa_tilde.clone())?;
    Ok(TTransformResult {
        curve: tilde,
        xi: Some(xi),
        kind: TransformKind::Riccati { xi, lambda, sign: if sign >= 0 { 1 } else { -1 } },
        chi,
        kappa_tilde,
        f: f.to_vec(),
        det_plus,
        det_minus,
    })
}

/// As [`t_transform`] but returns one result per pole-free segment.
pub fn t_transform_segmented(curve: &NullCurve, sol: &RiccatiSolution, sign: i8, guard: usize) -> Result<Vec<(Range<usize>, TTransformResult)>> {
    check_same_grid(&curve.grid, &sol.grid)?;
    sol.segments(guard)
        .into_iter()
        .map(|r| {
            let piece = curve.slice(r.clone())?;
            let out = transform_pole_free(&piece, sol.xi, &sol.f[r.clone()], sign)?;
            Ok((r, out))
        })
        .collect()
}

/// The explicit χ ≠ 0 family preserving constant bending `κ`.
pub fn constant_bending_transform(
    kappa: f64,
    curve: &NullCurve,
    c_plus: f64,
    c_minus: f64,
    sign_plus: i8,
    sign_minus: i8,
) -> Result<TTransformResult> {
    if let Some(k) = curve.kappa.iter().find(|k| (**k - kappa).abs() > 1e-12 * kappa.abs().max(1.0)) {
        return Err(Error::InvalidProfile(format!("curve bending {k} differs from the constant {kappa}")));
    }
    if c_plus == 0.0 || c_minus == 0.0 {
        return Err(Error::Domain("c₊ and c₋ must be nonzero".into()));
    }
    let rp = kappa + 1.0 + c_plus * c_plus;
    let rm = kappa - 1.0 + c_minus * c_minus;
    if rp < 0.0 {
        return Err(Error::Domain(format!("κ + 1 + c₊² = {rp} < 0")));
    }
    if rm < 0.0 {
        return Err(Error::Domain(format!("κ − 1 + c₋² = {rm} < 0")));
    }
    let f_plus = if sign_plus >= 0 { rp.sqrt() } else { -rp.sqrt() };
    let f_minus = if sign_minus >= 0 { rm.sqrt() } else { -rm.sqrt() };
    if (f_plus - f_minus).abs() <= 1e-14 * f_plus.abs().max(1.0) {
        return Err(Error::DegenerateTransform(f_plus));
    }
    let mp = Mat2::new(-f_plus, kappa + 1.0, 1.0, -f_plus) * (1.0 / c_plus);
    let mm = Mat2::new(-f_minus, kappa - 1.0, 1.0, -f_minus) * (1.0 / c_minus);
    let fplus = curve.fplus.iter().map(|f| *f * mp).collect();
    let fminus = curve.fminus.iter().map(|f| *f * mm).collect();
    let kappa_tilde = vec![kappa; curve.grid.n];
    let (tilde, det_plus, det_minus, chi) = assemble(curve, fplus, fminus, kappa_tilde.clone())?;
    Ok(TTransformResult {
        curve: tilde,
        xi: None,
        kind: TransformKind::ConstantBending {
            c_plus,
            c_minus,
            f_plus,
            f_minus,
            branch: BendingBranch::classify(c_plus, c_minus),
        },
        chi,
        kappa_tilde,
        f: Vec::new(),
        det_plus,
        det_minus,
    })
}

/// `(f₊ − f₋)/(c₊c₋)`, the χ value of the constant-bending family.
pub fn constant_bending_chi(f_plus: f64, f_minus: f64, c_plus: f64, c_minus: f64) -> f64 {
    (f_plus - f_minus) / (c_plus * c_minus)
}

/// Transforming functions and bending of the permuted double transform.
#[derive(Debug, Clone)]
pub struct Permutation {
    pub xi1: f64,
    pub xi2: f64,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f21: Vec<f64>,
    pub f12: Vec<f64>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub kappa21: Vec<f64>,
    /// Samples where `f₁ ≈ f₂` or either has a pole; values there are NaN.
    pub excluded: Vec<bool>,
    /// Max `|f₂₁′ + f₂₁² − κ₁ − cosh 2ξ₂|` on interior admissible samples.
    pub riccati_residual_21: f64,
    /// Max `|f₁₂′ + f₁₂² − κ₂ − cosh 2ξ₁|`.
    pub riccati_residual_12: f64,
    /// Max gap between the closed formula for `κ₂₁` and `−κ₁ + 2f₂₁² − 2cosh 2ξ₂`.
    pub bending_route_gap: f64,
}

/// Pointwise permutability formulas for two transforms of the same curve.
pub fn permute(profile: &BendingProfile, grid: SGrid, sol1: &RiccatiSolution, sol2: &RiccatiSolution) -> Result<Permutation> {
    if sol1.xi == sol2.xi {
        return Err(Error::EqualParameters(sol1.xi));
    }
    check_same_grid(&grid, &sol1.grid)?;
    check_same_grid(&grid, &sol2.grid)?;
    let (l1, l2) = (sol1.lambda, sol2.lambda);
    let dl = l1 - l2;
    let n = grid.n;
    let kappa: Vec<f64> = grid.points().iter().map(|&s| profile.value(s)).collect();
    let (f1, f2) = (&sol1.f, &sol2.f);
    let excluded: Vec<bool> = (0..n)
        .map(|i| sol1.pole[i] || sol2.pole[i] || (f1[i] - f2[i]).abs() <= EPS_COINCIDE || !(f1[i] - f2[i]).is_finite())
        .collect();
    let pick = |i: usize, v: f64| if excluded[i] { f64::NAN } else { v };
    let f21: Vec<f64> = (0..n).map(|i| pick(i, -f1[i] + dl / (f1[i] - f2[i]))).collect();
    let f12: Vec<f64> = (0..n).map(|i| pick(i, -f2[i] + dl / (f1[i] - f2[i]))).collect();
    let kappa1: Vec<f64> = (0..n).map(|i| transformed_bending(kappa[i], f1[i], l1)).collect();
    let kappa2: Vec<f64> = (0..n).map(|i| transformed_bending(kappa[i], f2[i], l2)).collect();
    let kappa21: Vec<f64> = (0..n)
        .map(|i| {
            let q = dl / (f1[i] - f2[i]);
            pick(i, kappa[i] - 2.0 * dl * (f1[i] + f2[i]) / (f1[i] - f2[i]) + 2.0 * q * q)
        })
        .collect();
    let bending_route_gap = (0..n)
        .filter(|&i| !excluded[i])
        .map(|i| (kappa21[i] - transformed_bending(kappa1[i], f21[i], l2)).abs())
        .fold(0.0, f64::max);
    let residual = |g: &[f64], k: &[f64], lambda: f64| -> f64 {
        (1..n - 1)
            .filter(|&i| !(excluded[i - 1] || excluded[i] || excluded[i + 1]))
            .map(|i| (fd::d1(g, i, grid.h) + g[i] * g[i] - k[i] - lambda).abs())
            .fold(0.0, f64::max)
    };
    Ok(Permutation {
        xi1: sol1.xi,
        xi2: sol2.xi,
        riccati_residual_21: residual(&f21, &kappa1, l2),
        riccati_residual_12: residual(&f12, &kappa2, l1),
        f1: f1.clone(),
        f2: f2.clone(),
        f21,
        f12,
        kappa1,
        kappa2,
        kappa21,
        excluded,
        bending_route_gap,
    })
}

/// Both orders of the double transform and their pointwise agreement.
#[derive(Debug, Clone)]
pub struct DoubleTransform {
    /// `T_{ξ₂,f₂₁}(T_{ξ₁,f₁}(γ))`.
    pub via_first: TTransformResult,
    /// `T_{ξ₁,f₁₂}(T_{ξ₂,f₂}(γ))`.
    pub via_second: TTransformResult,
    /// Max Frobenius distance between the two curves.
    pub max_discrepancy: f64,
    /// Max entry gap in `G±(ξ₁,f₁)G±(ξ₂,f₂₁) = G±(ξ₂,f₂)G±(ξ₁,f₁₂)`.
    pub g_identity_residual: f64,
}

pub fn double_transform(curve: &NullCurve, perm: &Permutation) -> Result<DoubleTransform> {
    if let Some(i) = perm.excluded.iter().position(|e| *e) {
        return Err(Error::PoleInRange { s: curve.grid.s(i) });
    }
    let grid = curve.grid;
    let s1 = RiccatiSolution::from_values(perm.xi1, grid, perm.f1.clone())?;
    let s2 = RiccatiSolution::from_values(perm.xi2, grid, perm.f2.clone())?;
    let s21 = RiccatiSolution::from_values(perm.xi2, grid, perm.f21.clone())?;
    let s12 = RiccatiSolution::from_values(perm.xi1, grid, perm.f12.clone())?;
    let via_first = t_transform(&t_transform(curve, &s1, 1)?.curve, &s21, 1)?;
    let via_second = t_transform(&t_transform(curve, &s2, 1)?.curve, &s12, 1)?;
    let max_discrepancy = via_first
        .curve
        .gamma
        .iter()
        .zip(&via_second.curve.gamma)
        .map(|(a, b)| (*a - *b).frob())
        .fold(0.0, f64::max);
    let g_identity_residual = g_identity_residual(perm);
    Ok(DoubleTransform { via_first, via_second, max_discrepancy, g_identity_residual })
}

/// Max entry gap of the G-matrix permutability identities over admissible samples.
pub fn g_identity_residual(perm: &Permutation) -> f64 {
    let (x1, x2) = (perm.xi1, perm.xi2);
    (0..perm.f1.len())
        .filter(|&i| !perm.excluded[i])
        .map(|i| {
            let (f1, f2, f21, f12) = (perm.f1[i], perm.f2[i], perm.f21[i], perm.f12[i]);
            let p = g_plus(x1, f1) * g_plus(x2, f21) - g_plus(x2, f2) * g_plus(x1, f12);
            let m = g_minus(x1, f1) * g_minus(x2, f21) - g_minus(x2, f2) * g_minus(x1, f12);
            p.max_abs().max(m.max_abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{integrate_spinor_frames, kappa_mn, verify_null_geometry};
    use proptest::prelude::*;

    fn constant_curve(k: f64, a: f64, b: f64, h: f64) -> (BendingProfile, NullCurve) {
        let prof = BendingProfile::Constant(k);
        let grid = SGrid::covering(a, b, h).unwrap();
        let c = integrate_spinor_frames(&prof, grid, Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        (prof, c)
    }

    /// Closed-form Riccati solution for constant κ with κ+λ = r² > 0.
    fn f_closed(r: f64, c: f64, s: f64) -> f64 {
        let (ch, sh) = ((r * s).cosh(), (r * s).sinh());
        r * (r * sh + c * ch) / (c * sh + r * ch)
    }

    #[test]
    fn fixed_point_solution() {
        let k = -0.7;
        let xi = 0.6_f64;
        let r = (k + (2.0 * xi).cosh()).sqrt();
        let grid = SGrid::covering(-2.0, 3.0, 1e-2).unwrap();
        let sol = solve_riccati(&BendingProfile::Constant(k), grid, xi, 0.0, r).unwrap();
        for f in &sol.f {
            assert!((f - r).abs() < 1e-12);
        }
        assert!(sol.is_pole_free());
    }

    #[test]
    fn matches_closed_form() {
        let k = kappa_mn(4, 1).unwrap();
        let lambda = 1.4 - k;
        let xi = 0.5 * lambda.acosh();
        let grid = SGrid::covering(-10.0, 10.0, 1e-3).unwrap();
        let sol = solve_riccati(&BendingProfile::Constant(k), grid, xi, 0.0, 0.0).unwrap();
        let r = 1.4_f64.sqrt();
        for i in (0..grid.n).step_by(101) {
            assert!((sol.f[i] - f_closed(r, 0.0, grid.s(i))).abs() < 1e-8);
            assert!((sol.f[i] + sol.x[i] / sol.y[i]).abs() < 1e-12);
        }
        assert!(sol.crosscheck.unwrap() < 1e-8);
        assert!(sol.riccati_residual(&BendingProfile::Constant(k)) < 1e-5);
    }

    #[test]
    fn off_node_initial_point() {
        let k = -0.3;
        let xi = 0.9_f64;
        let r = (k + (2.0 * xi).cosh()).sqrt();
        let grid = SGrid::covering(-1.0, 1.0, 1e-2).unwrap();
        let sol = solve_riccati(&BendingProfile::ClosedForm(crate::curves::ClosedForm::new("k", move |_| k)), grid, xi, 0.123, 0.4).unwrap();
        for i in 0..grid.n {
            let s = grid.s(i);
            assert!((sol.f[i] - f_closed(r, 0.4, s - 0.123)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_xi_rejected() {
        let grid = SGrid::covering(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(solve_riccati(&BendingProfile::Constant(0.0), grid, 0.0, 0.0, 0.0), Err(Error::ZeroXi)));
    }

    #[test]
    fn pole_located_by_bisection_oracle() {
        let k = 0.2;
        let xi = 0.7_f64;
        let r = (k + (2.0 * xi).cosh()).sqrt();
        let c = -1.5 * r;
        // zero of the closed-form denominator c·sinh(rs)/r + cosh(rs)
        let den = |s: f64| c * (r * s).sinh() / r + (r * s).cosh();
        let (mut a, mut b) = (0.0, 5.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if den(a) * den(m) <= 0.0 {
                b = m
            } else {
                a = m
            }
        }
        let grid = SGrid::covering(0.0, 3.0, 1e-3).unwrap();
        let sol = solve_riccati(&BendingProfile::Constant(k), grid, xi, 0.0, c).unwrap();
        let poles = sol.pole_locations();
        assert_eq!(poles.len(), 1);
        assert!((poles[0] - a).abs() < 1e-6, "{} vs {a}", poles[0]);
        assert!(!sol.is_pole_free());
        let segs = sol.segments(DEFAULT_GUARD);
        assert_eq!(segs.len(), 2);
        assert!(segs[0].end + DEFAULT_GUARD <= segs[1].start);
    }

    #[test]
    fn t_transform_determinants_and_chi() {
        let k = kappa_mn(7, 3).unwrap();
        let (prof, c) = constant_curve(k, 0.0, 3.0, 1e-3);
        let xi = 1.01_f64;
        let sol = solve_riccati(&prof, c.grid, xi, 0.0, 0.1).unwrap();
        let t = t_transform(&c, &sol, 1).unwrap();
        let sq2 = std::f64::consts::SQRT_2;
        assert!((t.det_plus.mean - 1.0 / (sq2 * xi.sinh())).abs() < 1e-8);
        assert!((t.det_minus.mean - 1.0 / (sq2 * xi.cosh())).abs() < 1e-8);
        assert!(t.det_plus.max_deviation < 1e-8 && t.det_minus.max_deviation < 1e-8);
        assert!(t.chi.mean.abs() < 1e-8 && t.chi.max_deviation < 1e-8);
        let r = verify_null_geometry(&t.curve).unwrap();
        assert!(r.max_bending_defect < 1e-3, "{r:?}");
        assert!(r.future_directed);
    }

    #[test]
    fn t_transform_matches_explicit_gamma() {
        let k = -0.4;
        let (prof, c) = constant_curve(k, 0.0, 1.0, 1e-2);
        let xi = 0.8_f64;
        let sol = solve_riccati(&prof, c.grid, xi, 0.0, 0.3).unwrap();
        for sign in [1i8, -1] {
            let t = t_transform(&c, &sol, sign).unwrap();
            let e = sign as f64;
            for i in 0..c.grid.n {
                let m = Mat2::new(xi.tanh(), -sol.f[i] / (xi.sinh() * xi.cosh()), 0.0, 1.0 / xi.tanh());
                let want = c.fplus[i] * m * c.fminus[i].inv() * e;
                assert!((t.curve.gamma[i] - want).frob() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_transform_keeps_bending() {
        let k = -0.5;
        let xi = 0.4_f64;
        let r = (k + (2.0 * xi).cosh()).sqrt();
        let (prof, c) = constant_curve(k, 0.0, 1.0, 1e-2);
        let sol = solve_riccati(&prof, c.grid, xi, 0.0, r).unwrap();
        let t = t_transform(&c, &sol, 1).unwrap();
        for kt in &t.kappa_tilde {
            assert!((kt - k).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_rejects_pole_but_segments() {
        let k = 0.2;
        let xi = 0.7_f64;
        let r = (k + (2.0 * xi).cosh()).sqrt();
        let (prof, c) = constant_curve(k, 0.0, 3.0, 1e-3);
        let sol = solve_riccati(&prof, c.grid, xi, 0.0, -1.5 * r).unwrap();
        assert!(matches!(t_transform(&c, &sol, 1), Err(Error::PoleInRange { .. })));
        let pieces = t_transform_segmented(&c, &sol, 1, DEFAULT_GUARD).unwrap();
        assert_eq!(pieces.len(), 2);
        for (_, p) in &pieces {
            assert!(p.det_plus.max_deviation < 1e-8);
            assert!(p.chi.mean.abs() < 1e-8);
        }
    }

    #[test]
    fn constant_bending_family() {
        let k = kappa_mn(7, 3).unwrap();
        let (_, c) = constant_curve(k, 0.0, 3.0, 1e-3);
        let t = constant_bending_transform(k, &c, 2.0, 2.0, 1, 1).unwrap();
        let TransformKind::ConstantBending { f_plus, f_minus, branch, .. } = t.kind else { panic!() };
        assert_eq!(branch, BendingBranch::Positive);
        assert!((t.chi.mean - constant_bending_chi(f_plus, f_minus, 2.0, 2.0)).abs() < 1e-8);
        assert!(t.chi.max_deviation < 1e-8);
        assert!(t.chi.mean.abs() > 0.1);
        for g in &t.curve.gamma {
            assert!((g.det() - 1.0).abs() < 1e-8);
        }
        let r = verify_null_geometry(&t.curve).unwrap();
        assert!(r.max_bending_defect < 1e-3);
        // explicit formula
        for i in (0..c.grid.n).step_by(250) {
            let a = Mat2::new(-f_plus, k + 1.0, 1.0, -f_plus);
            let b = Mat2::new(-f_minus, 1.0 - k, -1.0, -f_minus);
            let want = c.fplus[i] * a * b * c.fminus[i].inv() * 0.25;
            assert!((t.curve.gamma[i] - want).frob() < 1e-10);
        }
    }

    #[test]
    fn constant_bending_errors() {
        let k = kappa_mn(7, 3).unwrap();
        let (_, c) = constant_curve(k, 0.0, 1.0, 1e-2);
        assert!(matches!(constant_bending_transform(k, &c, 0.1, 2.0, 1, 1), Err(Error::Domain(_))));
        assert!(matches!(constant_bending_transform(k, &c, 2.0, 0.1, 1, 1), Err(Error::Domain(_))));
        // f₊² = κ+1+c₊², f₋² = κ−1+c₋²: equal when c₋² = c₊² + 2
        let cp = 1.0_f64;
        let cm = (cp * cp + 2.0).sqrt();
        assert!(matches!(constant_bending_transform(k, &c, cp, cm, 1, 1), Err(Error::DegenerateTransform(_))));
        assert_eq!(BendingBranch::classify(1.0, 2.0), BendingBranch::Negative);
        assert!(!BendingBranch::Negative.verified());
    }

    #[test]
    fn chi_by_differences_is_small() {
        let k = kappa_mn(7, 3).unwrap();
        let (prof, c) = constant_curve(k, 0.0, 2.0, 1e-3);
        let sol = solve_riccati(&prof, c.grid, 1.01, 0.0, 0.1).unwrap();
        let t = t_transform(&c, &sol, 1).unwrap();
        let col1 = |v: &[Mat2]| v.iter().map(Mat2::col1).collect::<Vec<_>>();
        let chi = chi_invariant(&col1(&c.fplus), &col1(&t.curve.fplus), &col1(&c.fminus), &col1(&t.curve.fminus), c.grid).unwrap();
        assert!(chi.mean.abs() < 1e-5);
    }

    #[test]
    fn permutability_constant_case() {
        let k = kappa_mn(4, 1).unwrap();
        let (prof, c) = constant_curve(k, 0.0, 2.0, 1e-3);
        let s1 = solve_riccati(&prof, c.grid, 0.8, 0.0, -0.5).unwrap();
        let s2 = solve_riccati(&prof, c.grid, 1.2, 0.0, 0.3).unwrap();
        let p = permute(&prof, c.grid, &s1, &s2).unwrap();
        assert!(!p.excluded.iter().any(|e| *e));
        assert!(p.bending_route_gap < 1e-10);
        assert!(p.riccati_residual_21 < 1e-3, "{}", p.riccati_residual_21);
        let d = double_transform(&c, &p).unwrap();
        assert!(d.max_discrepancy < 1e-6);
        assert!(d.g_identity_residual < 1e-10);
        for (a, b) in d.via_first.kappa_tilde.iter().zip(&p.kappa21) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(permute(&prof, c.grid, &s1, &s1), Err(Error::EqualParameters(_))));
    }

    #[test]
    fn permutability_residual_is_second_order() {
        let k = kappa_mn(4, 1).unwrap();
        let prof = BendingProfile::Constant(k);
        let run = |h: f64| {
            let grid = SGrid::covering(0.0, 2.0, h).unwrap();
            let s1 = solve_riccati(&prof, grid, 0.8, 0.0, -0.5).unwrap();
            let s2 = solve_riccati(&prof, grid, 1.2, 0.0, 0.3).unwrap();
            permute(&prof, grid, &s1, &s2).unwrap().riccati_residual_21
        };
        let ratio = run(1e-2) / run(5e-3);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn g_matrices_permute(x1 in 0.2..2.0f64, x2 in 0.2..2.0f64, f1 in -3.0..3.0f64, f2 in -3.0..3.0f64) {
            prop_assume!((x1 - x2).abs() > 1e-3 && (f1 - f2).abs() > 1e-2);
            let dl = (2.0 * x1).cosh() - (2.0 * x2).cosh();
            let f21 = -f1 + dl / (f1 - f2);
            let f12 = -f2 + dl / (f1 - f2);
            let p = g_plus(x1, f1) * g_plus(x2, f21) - g_plus(x2, f2) * g_plus(x1, f12);
            let m = g_minus(x1, f1) * g_minus(x2, f21) - g_minus(x2, f2) * g_minus(x1, f12);
            let scale = (1.0 + f21.abs() + f12.abs()).powi(2);
            prop_assert!(p.max_abs() <= 1e-10 * scale);
            prop_assert!(m.max_abs() <= 1e-10 * scale);
        }

        #[test]
        fn bending_relation_is_an_involution(k in -5.0..5.0f64, f in -5.0..5.0f64, xi in 0.1..2.0f64) {
            let l = (2.0 * xi).cosh();
            let back = transformed_bending(transformed_bending(k, f, l), f, l);
            prop_assert!((back - k).abs() <= 1e-12 * (1.0 + f * f + l));
        }

        #[test]
        fn lift_rescaling_keeps_f(a in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64], x in -3.0..3.0f64, y in 0.1..3.0f64) {
            prop_assert!((-(a * x) / (a * y) - (-x / y)).abs() <= 1e-12 * (1.0 + (x / y).abs()));
        }

        #[test]
        fn transform_invariants_hold(c0 in -0.9..0.9f64, xi in 0.3..1.5f64) {
            let k = kappa_mn(7, 3).unwrap();
            let (prof, c) = constant_curve(k, 0.0, 1.5, 1e-2);
            let sol = solve_riccati(&prof, c.grid, xi, 0.0, c0).unwrap();
            prop_assume!(sol.is_pole_free());
            let t = t_transform(&c, &sol, 1).unwrap();
            prop_assert!(t.det_plus.max_deviation <= 1e-8);
            prop_assert!(t.det_minus.max_deviation <= 1e-8);
            prop_assert!(t.chi.mean.abs() <= 1e-8);
            // reciprocity: det(η̃, η) = −det(η, η̃) is constant as well
            let col1 = |v: &[Mat2]| v.iter().map(Mat2::col1).collect::<Vec<_>>();
            let back = Constancy::of(&det_series(&col1(&t.curve.fplus), &col1(&c.fplus)));
            prop_assert!(back.max_deviation <= 1e-8);
            prop_assert!((back.mean + t.det_plus.mean).abs() <= 1e-12);
        }
    }
}
