use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform periodic grid on `[0, lx) x [0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 16 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be a power of two >= 16"
                )));
            }
        }
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "side lengths must be positive, got lx = {lx}, ly = {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square grid of side 2π.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 2.0 * PI, 2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    /// Flat index of point `(i, j)`; `i` runs along x1 and is fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Signed mode number for FFT index `i` along an axis of `n` points.
    #[inline]
    pub fn mode(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Angular wavenumber along x1 for FFT index `i`.
    #[inline]
    pub fn kx(&self, i: usize) -> f64 {
        2.0 * PI / self.lx * Self::mode(i, self.nx) as f64
    }

    /// Angular wavenumber along x2 for FFT index `j`.
    #[inline]
    pub fn ky(&self, j: usize) -> f64 {
        2.0 * PI / self.ly * Self::mode(j, self.ny) as f64
    }

    /// Largest |ξ| represented on the grid.
    pub fn max_wavenumber(&self) -> f64 {
        let kx = PI / self.lx * self.nx as f64;
        let ky = PI / self.ly * self.ny as f64;
        kx.hypot(ky)
    }

    /// Smallest nonzero |ξ| represented on the grid.
    pub fn min_wavenumber(&self) -> f64 {
        (2.0 * PI / self.lx).min(2.0 * PI / self.ly)
    }

    /// Highest mode number kept by the 2/3 dealiasing rule along each axis.
    pub fn dealias_cutoff(&self) -> (i64, i64) {
        ((self.nx / 3) as i64, (self.ny / 3) as i64)
    }
}
