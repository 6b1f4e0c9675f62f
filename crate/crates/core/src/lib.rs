//! Null curves in anti-de Sitter 3-space (modelled on SL(2,ℝ)), their
//! T-transforms, and the geometric realization of KdV solitons through the
//! LIEN flow.
//!
//! Modules are layered bottom-up: [`sl2core`] → [`curves`] → [`ttransform`]
//! → [`kdv`] → [`pipeline`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod error;
pub mod fd;
pub mod kdv;
pub mod pipeline;
pub mod sl2core;
pub mod ttransform;

pub use error::{Error, Result};
pub use sl2core::{Bivector, BivectorClass, BivectorKind, Mat2, Vec2};
