//! Null curves in SL(2,ℝ) reconstructed from their bending through the
//! spinorial Frenet-type equations `dF± = F±·K±`, together with the
//! star-shaped cousins and a numerical check of the defining properties.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::sl2core::{classify_bivector_with, det2, inner, sl2_exp, Bivector, BivectorKind, Mat2, Vec2};

/// Tolerance on `|det F - 1|` for initial frames.
const TOL_INIT_DET: f64 = 1e-10;
/// Tolerance on `|det F - 1|` for stored frames and curve points.
const TOL_DET: f64 = 1e-8;

/// Uniform grid `s_i = s0 + i·h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SGrid {
    pub s0: f64,
    pub h: f64,
    pub n: usize,
}

impl SGrid {
    pub fn new(s0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !s0.is_finite() {
            return Err(Error::InvalidGrid(format!("need finite s0 and h > 0, got s0 = {s0}, h = {h}")));
        }
        if n < 4 {
            return Err(Error::GridTooShort { need: 4, got: n });
        }
        Ok(SGrid { s0, h, n })
    }

    /// Grid on `[a, b]` with step at most `h_max`, adjusted so that `b` is a node.
    pub fn covering(a: f64, b: f64, h_max: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        if !(h_max > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {h_max}")));
        }
        let steps = ((b - a) / h_max - 1e-9).ceil().max(1.0) as usize;
        SGrid::new(a, (b - a) / steps as f64, steps + 1)
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.s(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.s(i)).collect()
    }

    pub fn contains(&self, s: f64) -> bool {
        let slack = 1e-9 * self.h;
        s >= self.s0 - slack && s <= self.end() + slack
    }

    /// Index of the node at `s`, if `s` is a node up to `1e-6·h`.
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let x = (s - self.s0) / self.h;
        let i = x.round();
        if (x - i).abs() <= 1e-6 && i >= 0.0 && (i as usize) < self.n {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Sub-grid of the nodes `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<SGrid> {
        SGrid::new(self.s(range.start), self.h, range.len())
    }

    /// Same interval with half the step.
    pub fn refined(&self) -> SGrid {
        SGrid { s0: self.s0, h: self.h / 2.0, n: 2 * self.n - 1 }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A bending function given by closures.
#[derive(Clone)]
pub struct ClosedForm {
    pub description: String,
    value: ScalarFn,
    d1: Option<ScalarFn>,
    d2: Option<ScalarFn>,
}

impl ClosedForm {
    pub fn new(description: impl Into<String>, value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ClosedForm { description: description.into(), value: Arc::new(value), d1: None, d2: None }
    }

    pub fn with_derivatives(
        mut self,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d1 = Some(Arc::new(d1));
        self.d2 = Some(Arc::new(d2));
        self
    }
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm")
            .field("description", &self.description)
            .field("analytic_derivatives", &self.d1.is_some())
            .finish()
    }
}

/// Bending κ(s) of a null curve.
#[derive(Debug, Clone)]
pub enum BendingProfile {
    Constant(f64),
    ClosedForm(ClosedForm),
    Sampled { grid: SGrid, values: Vec<f64> },
}

impl BendingProfile {
    /// `κ(s) = sin s`, with analytic derivatives.
    pub fn sine() -> Self {
        BendingProfile::ClosedForm(ClosedForm::new("sin(s)", f64::sin).with_derivatives(f64::cos, |s| -s.sin()))
    }

    pub fn sampled(grid: SGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::LengthMismatch { left: grid.n, right: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile(format!("non-finite sample at index {i}")));
        }
        Ok(BendingProfile::Sampled { grid, values })
    }

    pub fn describe(&self) -> String {
        match self {
            BendingProfile::Constant(k) => format!("constant({k})"),
            BendingProfile::ClosedForm(c) => c.description.clone(),
            BendingProfile::Sampled { grid, .. } => {
                format!("sampled(s0 = {}, h = {}, n = {})", grid.s0, grid.h, grid.n)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            BendingProfile::Constant(k) => Some(*k),
            _ => None,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            BendingProfile::Constant(k) => *k,
            BendingProfile::ClosedForm(c) => (c.value)(s),
            BendingProfile::Sampled { grid, values } => lagrange4(grid, values, s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match self {
            BendingProfile::Constant(_) => 0.0,
            BendingProfile::ClosedForm(ClosedForm { d1: Some(d), .. }) => d(s),
            BendingProfile::ClosedForm(c) => {
                let e = 1e-4;
                ((c.value)(s + e) - (c.value)(s - e)) / (2.0 * e)
            }
            BendingProfile::Sampled { .. } => {
                let e = self.sample_step();
                (self.value(s + e) - self.value(s - e)) / (2.0 * e)
            }
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match self {
            BendingProfile::Constant(_) => 0.0,
            BendingProfile::ClosedForm(ClosedForm { d2: Some(d), .. }) => d(s),
            BendingProfile::ClosedForm(c) => {
                let e = 1e-3;
                ((c.value)(s + e) - 2.0 * (c.value)(s) + (c.value)(s - e)) / (e * e)
            }
            BendingProfile::Sampled { .. } => {
                let e = self.sample_step();
                (self.value(s + e) - 2.0 * self.value(s) + self.value(s - e)) / (e * e)
            }
        }
    }

    fn sample_step(&self) -> f64 {
        match self {
            BendingProfile::Sampled { grid, .. } => grid.h,
            _ => 1e-4,
        }
    }
}

/// Cubic Lagrange interpolation on the four nodes surrounding `s`.
fn lagrange4(grid: &SGrid, values: &[f64], s: f64) -> f64 {
    if let Some(i) = grid.index_of(s) {
        return values[i];
    }
    let (base, w) = fd::lagrange4_weights((s - grid.s0) / grid.h, values.len());
    (0..4).map(|j| w[j] * values[base + j]).sum()
}

/// Sampled null curve with its spinor frame field.
#[derive(Debug, Clone, PartialEq)]
pub struct NullCurve {
    pub grid: SGrid,
    pub gamma: Vec<Mat2>,
    pub fplus: Vec<Mat2>,
    pub fminus: Vec<Mat2>,
    pub kappa: Vec<f64>,
}

impl NullCurve {
    /// Assemble a curve from frames, checking unimodularity.
    pub fn from_frames(grid: SGrid, fplus: Vec<Mat2>, fminus: Vec<Mat2>, kappa: Vec<f64>) -> Result<Self> {
        if fplus.len() != grid.n {
            return Err(Error::LengthMismatch { left: grid.n, right: fplus.len() });
        }
        if kappa.len() != grid.n {
            return Err(Error::LengthMismatch { left: grid.n, right: kappa.len() });
        }
        let gamma = curve_from_frames(&fplus, &fminus)?;
        Ok(NullCurve { grid, gamma, fplus, fminus, kappa })
    }

    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    /// Restriction to the nodes `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<NullCurve> {
        Ok(NullCurve {
            grid: self.grid.slice(range.clone())?,
            gamma: self.gamma[range.clone()].to_vec(),
            fplus: self.fplus[range.clone()].to_vec(),
            fminus: self.fminus[range.clone()].to_vec(),
            kappa: self.kappa[range].to_vec(),
        })
    }
}

/// `[[0, κ+1], [1, 0]]` for `sign = +1`, `[[0, κ−1], [1, 0]]` for `sign = −1`.
pub fn frenet_generator(k: f64, sign: i8) -> Mat2 {
    let e = if sign >= 0 { 1.0 } else { -1.0 };
    Mat2::new(0.0, k + e, 1.0, 0.0)
}

fn check_unimodular(m: &Mat2, tol: f64, what: &str) -> Result<()> {
    let d = m.det();
    if (d - 1.0).abs() > tol || !d.is_finite() {
        return Err(Error::NotUnimodular { det: d, context: what.to_string() });
    }
    Ok(())
}

/// Integrate `dF± = F±·K(κ(s) ± 1)` from `grid.s0`.
///
/// Constant profiles use the exact exponential at every node; otherwise
/// classical RK4 with the determinant projected back to 1 after each step.
pub fn integrate_spinor_frames(
    profile: &BendingProfile,
    grid: SGrid,
    f0plus: Mat2,
    f0minus: Mat2,
) -> Result<NullCurve> {
    check_unimodular(&f0plus, TOL_INIT_DET, "initial F+")?;
    check_unimodular(&f0minus, TOL_INIT_DET, "initial F-")?;
    let n = grid.n;
    let mut fplus = Vec::with_capacity(n);
    let mut fminus = Vec::with_capacity(n);
    let kappa: Vec<f64> = (0..n).map(|i| profile.value(grid.s(i))).collect();

    if let Some(k) = profile.as_constant() {
        let kp = frenet_generator(k, 1);
        let km = frenet_generator(k, -1);
        for i in 0..n {
            let ds = i as f64 * grid.h;
            fplus.push(f0plus * sl2_exp(&(kp * ds))?);
            fminus.push(f0minus * sl2_exp(&(km * ds))?);
        }
    } else {
        let h = grid.h;
        let (mut fp, mut fm) = (f0plus, f0minus);
        fplus.push(fp);
        fminus.push(fm);
        for i in 0..n - 1 {
            let s = grid.s(i);
            let k0 = profile.value(s);
            let kh = profile.value(s + 0.5 * h);
            let k1 = profile.value(s + h);
            fp = rk4_frame_step(fp, [k0 + 1.0, kh + 1.0, k1 + 1.0], h, s)?;
            fm = rk4_frame_step(fm, [k0 - 1.0, kh - 1.0, k1 - 1.0], h, s)?;
            fplus.push(fp);
            fminus.push(fm);
        }
    }
    NullCurve::from_frames(grid, fplus, fminus, kappa)
}

/// One RK4 step of `F' = F·[[0, a(s)], [1, 0]]` given `a` at `s`, `s+h/2`, `s+h`.
pub(crate) fn rk4_frame_step(f: Mat2, a: [f64; 3], h: f64, s: f64) -> Result<Mat2> {
    let k = |a: f64| Mat2::new(0.0, a, 1.0, 0.0);
    let k1 = f * k(a[0]);
    let k2 = (f + k1 * (0.5 * h)) * k(a[1]);
    let k3 = (f + k2 * (0.5 * h)) * k(a[1]);
    let k4 = (f + k3 * h) * k(a[2]);
    let next = f + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    next.project_sl2().ok_or(Error::StepTooLarge { s, h })
}

/// `γᵢ = F₊ᵢ·F₋ᵢ⁻¹`.
pub fn curve_from_frames(fplus: &[Mat2], fminus: &[Mat2]) -> Result<Vec<Mat2>> {
    if fplus.len() != fminus.len() {
        return Err(Error::LengthMismatch { left: fplus.len(), right: fminus.len() });
    }
    fplus
        .iter()
        .zip(fminus)
        .enumerate()
        .map(|(i, (p, m))| {
            check_unimodular(p, TOL_DET, &format!("F+ at index {i}"))?;
            check_unimodular(m, TOL_DET, &format!("F- at index {i}"))?;
            Ok(*p * m.adj())
        })
        .collect()
}

/// First columns of the frames: the star-shaped cousins `(η₊, η₋)`.
pub fn cousins(curve: &NullCurve) -> (Vec<Vec2>, Vec<Vec2>) {
    (curve.fplus.iter().map(Mat2::col1).collect(), curve.fminus.iter().map(Mat2::col1).collect())
}

/// Second columns of the frames, i.e. the analytic derivatives `(η₊′, η₋′)`.
pub fn cousin_derivatives(curve: &NullCurve) -> (Vec<Vec2>, Vec<Vec2>) {
    (curve.fplus.iter().map(Mat2::col2).collect(), curve.fminus.iter().map(Mat2::col2).collect())
}

/// Central affine curvature `k = det(η″, η′)` of a curve with `det(η, η′) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCurvature {
    pub values: Vec<f64>,
    /// True where a one-sided stencil was used.
    pub one_sided: Vec<bool>,
}

impl AffineCurvature {
    /// Values at nodes computed with central stencils.
    pub fn interior(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate().filter(|(i, _)| !self.one_sided[*i])
    }
}

pub fn central_affine_curvature(eta: &[Vec2], grid: SGrid) -> Result<AffineCurvature> {
    let n = eta.len();
    if n != grid.n {
        return Err(Error::LengthMismatch { left: grid.n, right: n });
    }
    if n < 5 {
        return Err(Error::GridTooShort { need: 5, got: n });
    }
    let x: Vec<f64> = eta.iter().map(|e| e[0]).collect();
    let y: Vec<f64> = eta.iter().map(|e| e[1]).collect();
    let h = grid.h;
    let values = (0..n)
        .map(|i| {
            let d1 = [fd::d1_any(&x, i, h), fd::d1_any(&y, i, h)];
            let d2 = [fd::d2_any(&x, i, h), fd::d2_any(&y, i, h)];
            det2(d2, d1)
        })
        .collect();
    let one_sided = (0..n).map(|i| i == 0 || i == n - 1).collect();
    Ok(AffineCurvature { values, one_sided })
}

/// Numerical check of the standing assumptions on a null curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub max_null_defect: f64,
    pub max_proper_time_defect: f64,
    pub max_bending_defect: f64,
    pub min_inflection_norm: f64,
    pub future_directed: bool,
    /// Same defects evaluated with one-sided stencils at the two ends.
    pub endpoint_defects: EndpointDefects,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointDefects {
    pub null: f64,
    pub proper_time: f64,
}

/// Finite-difference check of nullity, proper time, bending, absence of
/// inflections and time orientation.
///
/// `⟨γ′,γ′⟩` is evaluated with the compact midpoint difference, `γ″` with
/// the three-point stencil and `γ‴` with the five-point stencil; the maxima
/// run over the nodes where the five-point stencil fits.
pub fn verify_null_geometry(curve: &NullCurve) -> Result<GeometryReport> {
    let n = curve.grid.n;
    if n < 7 {
        return Err(Error::GridTooShort { need: 7, got: n });
    }
    if curve.gamma.len() != n || curve.kappa.len() != n {
        return Err(Error::LengthMismatch { left: n, right: curve.gamma.len().min(curve.kappa.len()) });
    }
    let g = &curve.gamma;
    let h = curve.grid.h;
    let tol_rank = (10.0 * h * h).max(crate::sl2core::TOL_RANK);

    let mut null: f64 = 0.0;
    let mut proper: f64 = 0.0;
    let mut bending: f64 = 0.0;
    let mut infl = f64::INFINITY;
    let mut future = true;
    for i in 2..n - 2 {
        let d1m = fd::d1_mid(g, i, h);
        null = null.max(inner(&d1m, &d1m).abs());
        let d1 = fd::d1(g, i, h);
        let d2 = fd::d2(g, i, h);
        let d3 = fd::d3(g, i, h);
        proper = proper.max((inner(&d2, &d2) - 4.0).abs());
        bending = bending.max((curve.kappa[i] + inner(&d3, &d3) / 16.0).abs());
        infl = infl.min(inflection_norm(&d1, &d2));
        let c = classify_bivector_with(&Bivector::new(g[i], d1), tol_rank);
        future &= c.kind == BivectorKind::MinusZero && c.positive;
    }
    let end_null = [fd::d1_any(g, 0, h), fd::d1_any(g, n - 1, h)]
        .iter()
        .map(|d| inner(d, d).abs())
        .fold(0.0, f64::max);
    let end_proper = [fd::d2_any(g, 0, h), fd::d2_any(g, n - 1, h)]
        .iter()
        .map(|d| (inner(d, d) - 4.0).abs())
        .fold(0.0, f64::max);
    Ok(GeometryReport {
        max_null_defect: null,
        max_proper_time_defect: proper,
        max_bending_defect: bending,
        min_inflection_norm: infl,
        future_directed: future,
        endpoint_defects: EndpointDefects { null: end_null, proper_time: end_proper },
    })
}

/// Size of `γ′∧γ″`: the larger of `|⟨⟨B,B⟩⟩|^{1/2}` and the Euclidean
/// norm of the Plücker minors.
fn inflection_norm(d1: &Mat2, d2: &Mat2) -> f64 {
    let b = Bivector::new(*d1, *d2);
    crate::sl2core::biv_inner(&b, &b).abs().sqrt().max(d1.wedge_norm(d2))
}

fn check_mn(m: i64, n: i64) -> Result<()> {
    if n < 1 || m <= n || m.gcd(&n) != 1 {
        return Err(Error::InvalidMn { m, n });
    }
    Ok(())
}

/// `κ_{m,n} = −(m² + n²)/(m² − n²)`.
pub fn kappa_mn(m: i64, n: i64) -> Result<f64> {
    check_mn(m, n)?;
    let (m2, n2) = ((m * m) as f64, (n * n) as f64);
    Ok(-(m2 + n2) / (m2 - n2))
}

/// Torus-knot type of the closed curve of bending `κ_{m,n}`.
pub fn torus_knot_type(m: i64, n: i64) -> Result<(i64, i64)> {
    check_mn(m, n)?;
    if (m + n) % 2 == 0 {
        Ok(((m - n) / 2, (m + n) / 2))
    } else {
        Ok((m - n, m + n))
    }
}

/// Period after which both spinor frames of a constant-bending curve return
/// to `sign·F(s0)` with a common sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosurePeriod {
    pub length: f64,
    pub sign: i8,
}

/// Smallest `L > 0` with `exp(L·K₊) = exp(L·K₋) = σ·Id` for constant `κ < −1`.
///
/// Scans `L = jπ/ω₊` (ω₊² = −(κ+1)) for `j ≤ max_j` and accepts the first
/// `L` with `L·ω₋/π` an integer of the same parity as `j`.
pub fn closure_period(kappa: f64, max_j: u32) -> Result<ClosurePeriod> {
    if !(kappa < -1.0) {
        return Err(Error::Domain(format!("closed constant-bending curves need κ < −1, got {kappa}")));
    }
    let wp = (-(kappa + 1.0)).sqrt();
    let wm = (1.0 - kappa).sqrt();
    for j in 1..=max_j {
        let l = j as f64 * std::f64::consts::PI / wp;
        let k = l * wm / std::f64::consts::PI;
        let kr = k.round();
        if (k - kr).abs() <= 1e-9 * k.max(1.0) && (kr as i64 - j as i64) % 2 == 0 {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            return Ok(ClosurePeriod { length: l, sign });
        }
    }
    Err(Error::Domain(format!("no common period found for κ = {kappa} with j ≤ {max_j}")))
}
