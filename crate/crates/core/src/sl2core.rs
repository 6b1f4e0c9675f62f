//! Linear algebra of ℝ^{2,2}: the split quadratic form `q(X) = -det X` on
//! 2×2 real matrices, its polarization, the induced inner product on
//! bivectors, and the closed-form exponential on 𝔰𝔩(2,ℝ).
//!
//! SL(2,ℝ) with the metric induced by `q` is the model of anti-de Sitter
//! 3-space used throughout the crate.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide degeneracy of a 2×2 Gram matrix.
pub const TOL_RANK: f64 = 1e-9;

/// Below this |δ²| the exponential switches to its Taylor series.
const EXP_SERIES_THRESHOLD: f64 = 1e-12;

pub type Vec2 = [f64; 2];

#[inline]
pub fn det2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// A 2×2 real matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    /// The rotation generator `[[0, 1], [-1, 0]]`.
    pub const J: Mat2 = Mat2::new(0.0, 1.0, -1.0, 0.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn from_cols(c1: Vec2, c2: Vec2) -> Self {
        Mat2::new(c1[0], c2[0], c1[1], c2[1])
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Mat2::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn col1(&self) -> Vec2 {
        [self.a11, self.a21]
    }

    pub fn col2(&self) -> Vec2 {
        [self.a12, self.a22]
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Adjugate; equals the inverse for unimodular matrices.
    pub fn adj(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    /// True inverse. Returns non-finite entries for singular input.
    pub fn inv(&self) -> Mat2 {
        self.adj() * (1.0 / self.det())
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn frob(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a21.abs()).max(self.a22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    /// Rescale to unit determinant, `X / sqrt(det X)`. Requires `det X > 0`.
    pub fn project_sl2(&self) -> Option<Mat2> {
        let d = self.det();
        if d > 0.0 && d.is_finite() {
            Some(*self * (1.0 / d.sqrt()))
        } else {
            None
        }
    }

    /// Euclidean norm of the Plücker coordinates of `self ∧ other` in ℝ⁴;
    /// zero iff the two matrices are linearly dependent.
    pub fn wedge_norm(&self, other: &Mat2) -> f64 {
        let u = self.to_array();
        let v = other.to_array();
        let mut acc = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let m = u[i] * v[j] - u[j] * v[i];
                acc += m * m;
            }
        }
        acc.sqrt()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::new(-self.a11, -self.a12, -self.a21, -self.a22)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, k: f64) -> Mat2 {
        Mat2::new(self.a11 * k, self.a12 * k, self.a21 * k, self.a22 * k)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m * self
    }
}

/// The quadratic form of signature (−,−,+,+): `q(X) = -det X`.
pub fn qform(x: &Mat2) -> f64 {
    x.a12 * x.a21 - x.a11 * x.a22
}

/// Polarization of [`qform`], `(q(X+Y) − q(X) − q(Y))/2`, expanded so that
/// it is exactly symmetric in floating point.
pub fn inner(x: &Mat2, y: &Mat2) -> f64 {
    0.5 * ((x.a12 * y.a21 + x.a21 * y.a12) - (x.a11 * y.a22 + x.a22 * y.a11))
}

/// The decomposable bivector `u ∧ v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bivector {
    pub u: Mat2,
    pub v: Mat2,
}

impl Bivector {
    pub fn new(u: Mat2, v: Mat2) -> Self {
        Bivector { u, v }
    }

    /// The fixed bivector `Id ∧ J` of type (−,−) defining the time orientation.
    pub fn reference() -> Self {
        Bivector::new(Mat2::IDENTITY, Mat2::J)
    }

    /// Gram matrix `[[<u,u>, <u,v>], [<v,u>, <v,v>]]`.
    pub fn gram(&self) -> [[f64; 2]; 2] {
        let uv = inner(&self.u, &self.v);
        [[inner(&self.u, &self.u), uv], [uv, inner(&self.v, &self.v)]]
    }
}

/// `<<U∧V, W∧Z>> = det [[<U,W>, <U,Z>], [<V,W>, <V,Z>]]`.
pub fn biv_inner(b1: &Bivector, b2: &Bivector) -> f64 {
    let uw = inner(&b1.u, &b2.u);
    let uz = inner(&b1.u, &b2.v);
    let vw = inner(&b1.v, &b2.u);
    let vz = inner(&b1.v, &b2.v);
    uw * vz - uz * vw
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BivectorKind {
    MinusMinus,
    MinusZero,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BivectorClass {
    pub kind: BivectorKind,
    /// Only meaningful for `MinusZero`.
    pub positive: bool,
}

/// Classify `u ∧ v` by the restriction of `<,>` to `span{u, v}`.
pub fn classify_bivector(b: &Bivector) -> BivectorClass {
    classify_bivector_with(b, TOL_RANK)
}

/// As [`classify_bivector`] with an explicit relative degeneracy tolerance.
pub fn classify_bivector_with(b: &Bivector, tol_rank: f64) -> BivectorClass {
    let other = BivectorClass { kind: BivectorKind::Other, positive: false };
    let nu = b.u.frob();
    let nv = b.v.frob();
    if nu == 0.0 || nv == 0.0 || b.u.wedge_norm(&b.v) <= 1e-12 * nu * nv {
        return other;
    }
    let g = b.gram();
    let half_tr = 0.5 * (g[0][0] + g[1][1]);
    let disc = (0.25 * (g[0][0] - g[1][1]).powi(2) + g[0][1] * g[0][1]).sqrt();
    let (lmax, lmin) = (half_tr + disc, half_tr - disc);
    let scale = lmax.abs().max(lmin.abs());
    if scale == 0.0 {
        return other;
    }
    let tol = tol_rank * scale;
    if lmax < -tol {
        BivectorClass { kind: BivectorKind::MinusMinus, positive: false }
    } else if lmax.abs() <= tol && lmin < -tol {
        let positive = biv_inner(&Bivector::reference(), b) > 0.0;
        BivectorClass { kind: BivectorKind::MinusZero, positive }
    } else {
        other
    }
}

/// Closed-form `exp(A)` for trace-free `A`, using `A² = δ² Id` with `δ² = -det A`.
pub fn sl2_exp(a: &Mat2) -> Result<Mat2> {
    let tr = a.trace();
    if tr.abs() > 1e-12 {
        return Err(Error::NotTraceFree(tr));
    }
    let d2 = -a.det();
    let (c, sc) = if d2.abs() < EXP_SERIES_THRESHOLD {
        (1.0 + d2 / 2.0, 1.0 + d2 / 6.0)
    } else if d2 > 0.0 {
        let d = d2.sqrt();
        (d.cosh(), d.sinh() / d)
    } else {
        let w = (-d2).sqrt();
        (w.cos(), w.sin() / w)
    };
    Ok(Mat2::IDENTITY * c + *a * sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        Mat2::new(a, b, c, d)
    }

    #[test]
    fn qform_examples() {
        assert_eq!(qform(&Mat2::IDENTITY), -1.0);
        assert_eq!(qform(&Mat2::J), -1.0);
        assert_eq!(qform(&m(1.0, 2.0, 3.0, 4.0)), 2.0);
    }

    #[test]
    fn inner_examples() {
        let x = m(1.0, 2.0, 3.0, 4.0);
        assert_eq!(inner(&x, &x), 2.0);
        assert_eq!(inner(&Mat2::IDENTITY, &Mat2::J), 0.0);
        assert_eq!(inner(&Mat2::IDENTITY, &Mat2::IDENTITY), -1.0);
    }

    #[test]
    fn biv_inner_examples() {
        let ij = Bivector::reference();
        let ji = Bivector::new(Mat2::J, Mat2::IDENTITY);
        assert_eq!(biv_inner(&ij, &ij), 1.0);
        assert_eq!(biv_inner(&ij, &ji), -1.0);
        let x = m(0.3, -1.2, 2.0, 0.7);
        let xx = Bivector::new(x, x);
        assert_eq!(biv_inner(&xx, &ij), 0.0);
    }

    #[test]
    fn classify_examples() {
        let c = classify_bivector(&Bivector::reference());
        assert_eq!(c.kind, BivectorKind::MinusMinus);
        assert!(!c.positive);

        let x = m(0.3, -1.2, 2.0, 0.7);
        assert_eq!(classify_bivector(&Bivector::new(x, x)).kind, BivectorKind::Other);

        // γ ∧ γ' at the start of a proper-time null curve with Id frames.
        let g = Mat2::IDENTITY;
        let dg = m(0.0, 2.0, 0.0, 0.0);
        let c = classify_bivector(&Bivector::new(g, dg));
        assert_eq!(c.kind, BivectorKind::MinusZero);
        assert!(c.positive);
        // reversed time direction
        let c = classify_bivector(&Bivector::new(g, -dg));
        assert_eq!(c.kind, BivectorKind::MinusZero);
        assert!(!c.positive);
    }

    #[test]
    fn exp_examples() {
        assert_eq!(sl2_exp(&Mat2::ZERO).unwrap(), Mat2::IDENTITY);

        let s = 0.8_f64;
        let e = sl2_exp(&m(0.0, s, s, 0.0)).unwrap();
        let want = m(s.cosh(), s.sinh(), s.sinh(), s.cosh());
        assert!((e - want).max_abs() < 1e-15);

        let th = 1.3_f64;
        let e = sl2_exp(&m(0.0, -th, th, 0.0)).unwrap();
        let want = m(th.cos(), -th.sin(), th.sin(), th.cos());
        assert!((e - want).max_abs() < 1e-15);

        assert!(matches!(sl2_exp(&m(1.0, 0.0, 0.0, 0.0)), Err(Error::NotTraceFree(_))));
    }

    #[test]
    fn exp_branch_consistency_at_threshold() {
        // nilpotent direction plus a tiny hyperbolic/elliptic perturbation
        for &eps in &[0.999e-12, 1.001e-12, -0.999e-12, -1.001e-12] {
            let a = m(0.0, eps, 1.0, 0.0);
            let e = sl2_exp(&a).unwrap();
            let series = Mat2::IDENTITY * (1.0 + eps / 2.0) + a * (1.0 + eps / 6.0);
            assert!((e - series).max_abs() < 1e-10);
        }
    }

    fn trace_free() -> impl Strategy<Value = Mat2> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64)
            .prop_filter("norm ≤ 10", |(a, b, c)| (2.0 * a * a + b * b + c * c).sqrt() <= 10.0)
            .prop_map(|(a, b, c)| m(a, b, c, -a))
    }

    fn entries() -> impl Strategy<Value = Mat2> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64)
            .prop_map(|(a, b, c, d)| m(a, b, c, d))
    }

    proptest! {
        #[test]
        fn qform_is_minus_det(x in entries()) {
            prop_assert_eq!(qform(&x), x.a12 * x.a21 - x.a11 * x.a22);
            prop_assert!((qform(&x) + x.det()).abs() <= 1e-12 * (1.0 + x.max_abs().powi(2)));
        }

        #[test]
        fn inner_is_symmetric_bilinear(x in entries(), y in entries(), z in entries(),
                                       a in -10.0..10.0f64, b in -10.0..10.0f64) {
            prop_assert_eq!(inner(&x, &y), inner(&y, &x));
            let lhs = inner(&(x * a + y * b), &z);
            let rhs = a * inner(&x, &z) + b * inner(&y, &z);
            // relative to the magnitude of the summands (entries up to 1e4)
            prop_assert!((lhs - rhs).abs() <= 1e-12 * 1e4);
            prop_assert!((inner(&x, &x) - qform(&x)).abs() <= 1e-12 * 1e2);
        }

        #[test]
        fn biv_inner_antisymmetric(u in entries(), v in entries(), w in entries(), z in entries()) {
            let a = biv_inner(&Bivector::new(u, v), &Bivector::new(w, z));
            let b = biv_inner(&Bivector::new(v, u), &Bivector::new(w, z));
            prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn minus_minus_has_positive_self_product(u in entries(), v in entries()) {
            let b = Bivector::new(u, v);
            if classify_bivector(&b).kind == BivectorKind::MinusMinus {
                prop_assert!(biv_inner(&b, &b) > 0.0);
            }
        }

        #[test]
        fn exp_is_unimodular(a in trace_free()) {
            let e = sl2_exp(&a).unwrap();
            // relative to the entry scale, which reaches e^10
            prop_assert!((e.det() - 1.0).abs() <= 1e-12 * e.max_abs().powi(2).max(1.0));
            let back = e * sl2_exp(&(-a)).unwrap();
            prop_assert!((back - Mat2::IDENTITY).max_abs() <= 1e-10 * e.max_abs().powi(2).max(1.0));
        }
    }
}
