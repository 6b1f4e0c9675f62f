//! Uniform-grid finite-difference stencils shared by the residual checks.

use std::ops::{Add, Mul, Sub};

use crate::sl2core::Mat2;

/// Anything that can be combined linearly: `f64` and [`Mat2`].
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl Linear for f64 {}
impl Linear for Mat2 {}

/// Second-order central first derivative at interior index `i`.
pub fn d1<T: Linear>(v: &[T], i: usize, h: f64) -> T {
    (v[i + 1] - v[i - 1]) * (0.5 / h)
}

/// Second-order first derivative at any index: central inside, one-sided
/// three-point at the ends. Requires `v.len() >= 3`.
pub fn d1_any<T: Linear>(v: &[T], i: usize, h: f64) -> T {
    let n = v.len();
    if i == 0 {
        (v[0] * -3.0 + v[1] * 4.0 - v[2]) * (0.5 / h)
    } else if i == n - 1 {
        (v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) * (0.5 / h)
    } else {
        d1(v, i, h)
    }
}

/// Forward difference `(v[i+1] - v[i]) / h`, second-order at the midpoint.
pub fn d1_mid<T: Linear>(v: &[T], i: usize, h: f64) -> T {
    (v[i + 1] - v[i]) * (1.0 / h)
}

/// Second-order central second derivative at interior index `i`.
pub fn d2<T: Linear>(v: &[T], i: usize, h: f64) -> T {
    (v[i + 1] - v[i] * 2.0 + v[i - 1]) * (1.0 / (h * h))
}

/// Second derivative at any index; one-sided four-point stencils at the ends.
/// Requires `v.len() >= 4`.
pub fn d2_any<T: Linear>(v: &[T], i: usize, h: f64) -> T {
    let n = v.len();
    let k = 1.0 / (h * h);
    if i == 0 {
        (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) * k
    } else if i == n - 1 {
        (v[n - 1] * 2.0 - v[n - 2] * 5.0 + v[n - 3] * 4.0 - v[n - 4]) * k
    } else {
        d2(v, i, h)
    }
}

/// Five-point central third derivative `(−½, 1, 0, −1, ½)/h³` at index `i`
/// (needs `2 <= i < len - 2`).
pub fn d3<T: Linear>(v: &[T], i: usize, h: f64) -> T {
    (v[i + 2] * 0.5 - v[i + 1] + v[i - 1] - v[i - 2] * 0.5) * (1.0 / (h * h * h))
}

/// Cubic Lagrange weights for the fractional index `x` on `n >= 4` nodes:
/// returns the first node of the four-point stencil and its weights.
pub fn lagrange4_weights(x: f64, n: usize) -> (usize, [f64; 4]) {
    let base = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut w = [1.0; 4];
    for (j, wj) in w.iter_mut().enumerate() {
        let xj = (base + j) as f64;
        for k in 0..4 {
            if k != j {
                let xk = (base + k) as f64;
                *wj *= (x - xk) / (xj - xk);
            }
        }
    }
    (base, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_on_cubic() {
        let h = 0.1;
        let v: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3)).collect();
        let s = 4.0 * h;
        assert!((d1(&v, 4, h) - (3.0 * s * s + h * h)).abs() < 1e-12);
        assert!((d2(&v, 4, h) - 6.0 * s).abs() < 1e-12);
        assert!((d3(&v, 4, h) - 6.0).abs() < 1e-9);
        assert!((d1_any(&v, 0, h) - (-2.0 * h * h)).abs() < 1e-12);
        assert!((d2_any(&v, 0, h) - 0.0).abs() < 1e-9);
    }
}
