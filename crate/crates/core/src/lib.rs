//! Pseudospectral simulator and identity-verification toolkit for the two-dimensional
//! relativistic Euler equations in log-enthalpy / rescaled-velocity variables.
//!
//! The state `(h, v¹, v²)` lives on a periodic grid; `v⁰` is always recovered from the
//! normalization `e^{-2h} v^α v_α = −1`.

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hyperbolic;
pub mod jet;
pub mod scenario;
pub mod thermo;
pub mod vorticity;
pub mod wave;

pub use error::{Error, Result};
