//! Periodic grids, spectral calculus, Littlewood–Paley bands and norms.

mod fft;
mod grid;
mod lp;
mod norms;
mod scalar;
mod snapshot;

pub(crate) use fft::{plan, plan_1d};
pub use grid::Grid2D;
pub use lp::{
    band_range, besov_inf2, holder_proxy, low_pass, lp_decompose, lp_project, psi, zeta,
    DyadicBand,
};
pub use norms::{
    homogeneous_sobolev_norm, lp_norm, mixed_norms, simpson, sobolev_norm, MixedNorms,
};
pub use scalar::{Axis, ScalarField2D, Spectrum};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};

/// Spectral derivative of `f` along `axis`.
pub fn spectral_derivative(f: &ScalarField2D, axis: Axis) -> crate::Result<ScalarField2D> {
    f.derivative(axis)
}
