//! Conformal harmonic discs in Riemannian charts, minimal plurisubharmonic
//! functions and the Kobayashi–Royden pseudometric.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chart;
pub mod disc;
pub mod error;
pub mod field;
pub mod kobayashi;
pub mod mpsh;
pub mod numerics;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
