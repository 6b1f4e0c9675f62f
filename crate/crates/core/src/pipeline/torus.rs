//! A chart of SL(2,ℝ) onto the open solid torus of radii 2 and 1, used
//! only to visualize curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sl2core::Mat2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TorusPoint {
    /// `(√(x² + y²) − 2)² + z² < 1`.
    pub fn is_inside(&self) -> bool {
        ((self.x * self.x + self.y * self.y).sqrt() - 2.0).powi(2) + self.z * self.z < 1.0
    }
}

/// With `x₁ = (a+d)/2, x₂ = (b−c)/2, x₃ = (b+c)/2, x₄ = (a−d)/2`,
/// `θ = atan2(x₂, x₁)` and `(u, v) = (x₃, x₄)/√(1 + x₃² + x₄²)`, returns
/// `((2+u)cos θ, (2+u)sin θ, v)`.
pub fn torus_embed(m: &Mat2) -> Result<TorusPoint> {
    let det = m.det();
    if !((det - 1.0).abs() <= 1e-6) {
        return Err(Error::NotUnimodular { det, context: "torus_embed".into() });
    }
    let x1 = 0.5 * (m.a11 + m.a22);
    let x2 = 0.5 * (m.a12 - m.a21);
    let x3 = 0.5 * (m.a12 + m.a21);
    let x4 = 0.5 * (m.a11 - m.a22);
    let theta = x2.atan2(x1);
    let r = (1.0 + x3 * x3 + x4 * x4).sqrt();
    let (u, v) = (x3 / r, x4 / r);
    Ok(TorusPoint { x: (2.0 + u) * theta.cos(), y: (2.0 + u) * theta.sin(), z: v })
}
