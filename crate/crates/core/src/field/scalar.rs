use super::fft::plan;
use super::grid::Grid2D;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Spatial coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Real scalar field sampled on a [`Grid2D`], row-major with x1 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

/// Normalized Fourier coefficients of a field, same layout as the physical values.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what: what.to_string(),
            index,
        }),
        None => Ok(()),
    }
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite("field", &values)?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        check_finite(what, &self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.grid, x.grid, "grid mismatch");
        self.values
            .iter_mut()
            .zip(&x.values)
            .for_each(|(y, &xv)| *y += a * xv);
    }

    pub fn spectrum(&self) -> Spectrum {
        let fft = plan(self.grid.nx, self.grid.ny);
        Spectrum {
            grid: self.grid,
            coeffs: fft.forward_real(&self.values),
        }
    }

    /// Exact Fourier derivative along `axis`.
    pub fn derivative(&self, axis: Axis) -> Result<Self> {
        self.check_finite("spectral_derivative input")?;
        let (a, b) = match axis {
            Axis::X1 => (1, 0),
            Axis::X2 => (0, 1),
        };
        Ok(self.spectrum().derivative(a, b).to_field())
    }

    /// 2/3-rule truncation.
    pub fn dealiased(&self) -> Self {
        self.spectrum().dealiased().to_field()
    }

    /// Continuum L² norm by grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    /// Continuum L² inner product by grid quadrature.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl Spectrum {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[self.grid.idx(i, j)]
    }

    pub fn to_field(&self) -> ScalarField2D {
        let fft = plan(self.grid.nx, self.grid.ny);
        ScalarField2D {
            grid: self.grid,
            values: fft.inverse_real(self.coeffs.clone()),
        }
    }

    /// Multiplies every coefficient by `m(kx, ky)`.
    pub fn multiplied(&self, m: impl Fn(f64, f64) -> f64) -> Self {
        let g = self.grid;
        let mut coeffs = self.coeffs.clone();
        for j in 0..g.ny {
            let ky = g.ky(j);
            for i in 0..g.nx {
                coeffs[g.idx(i, j)] *= m(g.kx(i), ky);
            }
        }
        Self { grid: g, coeffs }
    }

    /// Applies ∂₁^a ∂₂^b; Nyquist modes of a differentiated axis are zeroed.
    pub fn derivative(&self, a: u32, b: u32) -> Self {
        let g = self.grid;
        let mut coeffs = self.coeffs.clone();
        let ipow = |k: f64, p: u32| Complex64::new(0.0, k).powu(p);
        for j in 0..g.ny {
            let fy = if b > 0 && j == g.ny / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                ipow(g.ky(j), b)
            };
            for i in 0..g.nx {
                let fx = if a > 0 && i == g.nx / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    ipow(g.kx(i), a)
                };
                coeffs[g.idx(i, j)] *= fx * fy;
            }
        }
        Self { grid: g, coeffs }
    }

    pub fn dealiased(&self) -> Self {
        let g = self.grid;
        let (cx, cy) = g.dealias_cutoff();
        let mut coeffs = self.coeffs.clone();
        for j in 0..g.ny {
            let my = Grid2D::mode(j, g.ny).abs();
            for i in 0..g.nx {
                if my > cy || Grid2D::mode(i, g.nx).abs() > cx {
                    coeffs[g.idx(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Self { grid: g, coeffs }
    }

    /// Exponential filter exp(-α η^p) per axis, with η the mode number over the dealiasing cutoff.
    pub fn exp_filtered(&self, alpha: f64, order: i32) -> Self {
        let g = self.grid;
        let (cx, cy) = g.dealias_cutoff();
        let sigma = |m: i64, c: i64| {
            let eta = (m.abs() as f64 / c as f64).min(1.0);
            (-alpha * eta.powi(order)).exp()
        };
        let mut coeffs = self.coeffs.clone();
        for j in 0..g.ny {
            let sy = sigma(Grid2D::mode(j, g.ny), cy);
            for i in 0..g.nx {
                coeffs[g.idx(i, j)] *= sy * sigma(Grid2D::mode(i, g.nx), cx);
            }
        }
        Self { grid: g, coeffs }
    }

    /// Σ |f̂|², so that `lx*ly*energy()` is the squared L² norm.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

impl Add for &ScalarField2D {
    type Output = ScalarField2D;
    fn add(self, rhs: Self) -> ScalarField2D {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField2D {
    type Output = ScalarField2D;
    fn sub(self, rhs: Self) -> ScalarField2D {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField2D {
    type Output = ScalarField2D;
    fn mul(self, rhs: f64) -> ScalarField2D {
        self.map(|a| a * rhs)
    }
}

impl Mul for &ScalarField2D {
    type Output = ScalarField2D;
    fn mul(self, rhs: Self) -> ScalarField2D {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &ScalarField2D {
    type Output = ScalarField2D;
    fn neg(self) -> ScalarField2D {
        self.map(|a| -a)
    }
}
