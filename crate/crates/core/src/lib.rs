//! Finite-difference laboratory for the modified Zakharov-Kuznetsov
//! equation `u_t + u_x + u^2 u_x + u_xxx + u_xyy = 0` on the rectangle
//! `[0, L] x [-B, B]` with `u = 0` on the boundary and `u_x(L, y) = 0`.

pub mod banded;
pub mod checkpoint;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod functional;
pub mod grid;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, RectGrid};
