//! Littlewood–Paley projections on the periodic grid.
//!
//! The cutoff `psi` equals 1 on `[0, 1]` and vanishes on `[2, ∞)`; the band multiplier
//! `zeta(r) = psi(r) - psi(2r)` is supported in `[1/2, 2]` and the dilates telescope to 1.

use super::grid::Grid2D;
use super::scalar::{ScalarField2D, Spectrum};
use crate::error::{Error, Result};

fn smooth_step_tail(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth radial low-pass cutoff.
pub fn psi(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = smooth_step_tail(2.0 - r);
        let b = smooth_step_tail(r - 1.0);
        a / (a + b)
    }
}

/// Band multiplier supported in `1/2 <= r <= 2`.
pub fn zeta(r: f64) -> f64 {
    psi(r) - psi(2.0 * r)
}

/// Frequency-localized piece `P_j f`.
#[derive(Debug, Clone)]
pub struct DyadicBand {
    pub j: i32,
    pub field: ScalarField2D,
}

/// Inclusive range of band indices whose support meets the grid's nonzero frequencies.
pub fn band_range(grid: &Grid2D) -> (i32, i32) {
    let jmin = grid.min_wavenumber().log2().floor() as i32;
    let jmax = grid.max_wavenumber().log2().ceil() as i32;
    (jmin, jmax)
}

fn band_from_spectrum(spec: &Spectrum, j: i32) -> ScalarField2D {
    let scale = 2f64.powi(-j);
    spec.multiplied(|kx, ky| {
        let r = kx.hypot(ky);
        if r == 0.0 {
            0.0
        } else {
            zeta(scale * r)
        }
    })
    .to_field()
}

fn check_band(grid: &Grid2D, j: i32) -> Result<()> {
    let (lo, hi) = band_range(grid);
    if j < lo || j > hi {
        return Err(Error::OutOfRange {
            what: "band index j".into(),
            detail: format!("{j} not in [{lo}, {hi}]"),
        });
    }
    Ok(())
}

/// Applies the multiplier `zeta(2^{-j}|ξ|)`.
pub fn lp_project(f: &ScalarField2D, j: i32) -> Result<DyadicBand> {
    check_band(f.grid(), j)?;
    f.check_finite("lp_project input")?;
    Ok(DyadicBand {
        j,
        field: band_from_spectrum(&f.spectrum(), j),
    })
}

/// All bands of `f` over [`band_range`], from a single forward transform.
pub fn lp_decompose(f: &ScalarField2D) -> Vec<DyadicBand> {
    let spec = f.spectrum();
    let (lo, hi) = band_range(f.grid());
    (lo..=hi)
        .map(|j| DyadicBand {
            j,
            field: band_from_spectrum(&spec, j),
        })
        .collect()
}

/// Low-pass truncation `P_{<=j} f`, multiplier `psi(2^{-j}|ξ|)` including the zero mode.
pub fn low_pass(f: &ScalarField2D, j: i32) -> ScalarField2D {
    let scale = 2f64.powi(-j);
    f.spectrum()
        .multiplied(|kx, ky| psi(scale * kx.hypot(ky)))
        .to_field()
}

/// Besov norm `(Σ_j (2^{ja} ‖P_j f‖_∞)²)^{1/2}` of the homogeneous space Ḃ^a_{∞,2}.
pub fn besov_inf2(f: &ScalarField2D, a: f64) -> f64 {
    lp_decompose(f)
        .iter()
        .map(|b| (2f64.powf(a * b.j as f64) * b.field.max_abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Hölder proxy `sup_j 2^{jδ} ‖P_j f‖_∞ + ‖f‖_∞`.
pub fn holder_proxy(f: &ScalarField2D, delta: f64) -> f64 {
    let sup = lp_decompose(f)
        .iter()
        .map(|b| 2f64.powf(delta * b.j as f64) * b.field.max_abs())
        .fold(0.0, f64::max);
    sup + f.max_abs()
}
