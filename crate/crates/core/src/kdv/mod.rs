//! KdV solutions and their geometric realization: extended frames,
//! Wahlquist–Estabrook transforming functions, Bäcklund transforms, frame
//! reconstruction, the LIEN flow and the two-step soliton chain.

mod chain;
mod frames;
mod lien;
mod solution;
mod we;

pub use chain::{decay_window, soliton_chain, DecayWindow, SolitonChain};
pub use frames::{
    extended_frame_constant, extended_frame_field_constant, extended_frame_numeric, frame_equation_residual,
    frame_path_check, gamma_matrices, recon_frame, recon_matrix, ExtendedFrameField, FrameResidual, PathCheck,
};
pub use lien::{
    lien_curve, lien_residual, rigid_motion_check, t_transform_flow, LienField, RigidMotionReport,
};
pub use solution::{kdv_residual, kdv_residual_values, Jet, KdvSolution, Soliton1, Soliton2};
pub use we::{backlund, we_function, we_residual, WeField, WeForm, WeResidual};

use serde::{Deserialize, Serialize};

use crate::curves::SGrid;
use crate::error::{Error, Result};

/// Uniform `(s, t)` grid; samples are stored row-major with `t` as the
/// outer index, so each row is a `t`-slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct STGrid {
    pub sgrid: SGrid,
    pub t0: f64,
    pub ht: f64,
    pub nt: usize,
}

impl STGrid {
    pub fn new(sgrid: SGrid, t0: f64, ht: f64, nt: usize) -> Result<Self> {
        if !(ht > 0.0 && ht.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("need finite t0 and ht > 0, got t0 = {t0}, ht = {ht}")));
        }
        if nt < 4 {
            return Err(Error::GridTooShort { need: 4, got: nt });
        }
        Ok(STGrid { sgrid, t0, ht, nt })
    }

    /// Grid on `[s_a, s_b] × [t_a, t_b]` with steps at most `hs`, `ht`.
    pub fn covering(s: (f64, f64), t: (f64, f64), hs: f64, ht: f64) -> Result<Self> {
        let sg = SGrid::covering(s.0, s.1, hs)?;
        let tg = SGrid::covering(t.0, t.1, ht)?;
        STGrid::new(sg, tg.s0, tg.h, tg.n)
    }

    pub fn ns(&self) -> usize {
        self.sgrid.n
    }

    pub fn hs(&self) -> f64 {
        self.sgrid.h
    }

    pub fn len(&self) -> usize {
        self.sgrid.n * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn s(&self, i: usize) -> f64 {
        self.sgrid.s(i)
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.ht
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.sgrid.n + i
    }

    /// The `t` direction as an [`SGrid`].
    pub fn tgrid(&self) -> SGrid {
        SGrid { s0: self.t0, h: self.ht, n: self.nt }
    }

    pub fn index_of(&self, s: f64, t: f64) -> Option<(usize, usize)> {
        Some((self.sgrid.index_of(s)?, self.tgrid().index_of(t)?))
    }

    /// Node indices of `(0, 0)`.
    pub fn origin(&self) -> Result<(usize, usize)> {
        self.index_of(0.0, 0.0).ok_or(Error::OffGrid { s: 0.0, t: 0.0 })
    }

    /// Same rectangle with both steps halved.
    pub fn refined(&self) -> STGrid {
        STGrid { sgrid: self.sgrid.refined(), t0: self.t0, ht: self.ht / 2.0, nt: 2 * self.nt - 1 }
    }

    /// Evaluate `f(s, t)` at every node in storage order.
    pub fn map<T>(&self, mut f: impl FnMut(f64, f64) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.nt {
            let t = self.t(j);
            for i in 0..self.ns() {
                out.push(f(self.s(i), t));
            }
        }
        out
    }
}

/// `R(x, y, z) = [[x, x² − y + z], [1, x]]`, with `det R = y − z`.
pub fn r_matrix(x: f64, y: f64, z: f64) -> crate::sl2core::Mat2 {
    crate::sl2core::Mat2::new(x, x * x - y + z, 1.0, x)
}
