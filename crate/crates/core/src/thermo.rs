//! Equation of state `p = ϱ^A`, the log-enthalpy variables, Θ and the acoustic metric.

use crate::error::{Error, Result};
use crate::field::{Grid2D, ScalarField2D};
use serde::{Deserialize, Serialize};

const CS2_CEILING: f64 = 1.0 + 1e-12;

/// Polytropic equation of state with exponent `A >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationOfState {
    a: f64,
}

impl EquationOfState {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 1.0) {
            return Err(Error::OutOfRange {
                what: "A".into(),
                detail: format!("A must be ≥ 1, got {a}"),
            });
        }
        Ok(Self { a })
    }

    pub fn stiff() -> Self {
        Self { a: 1.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.a
    }

    pub fn is_stiff(&self) -> bool {
        self.a == 1.0
    }

    fn k(&self) -> f64 {
        (self.a - 1.0) / self.a
    }

    /// Energy density ϱ(h).
    pub fn rho(&self, h: f64) -> f64 {
        if self.is_stiff() {
            (2.0 * h).exp()
        } else {
            (h * self.k()).exp_m1().powf(1.0 / (self.a - 1.0))
        }
    }

    pub fn pressure(&self, h: f64) -> f64 {
        self.rho(h).powf(self.a)
    }

    /// Squared sound speed `A ϱ^{A-1}`.
    pub fn cs2(&self, h: f64) -> f64 {
        if self.is_stiff() {
            1.0
        } else {
            self.a * (h * self.k()).exp_m1()
        }
    }

    pub fn cs(&self, h: f64) -> f64 {
        self.cs2(h).sqrt()
    }

    /// `c_s c_s'` with the prime denoting d/dh.
    pub fn cs_dcs(&self, h: f64) -> f64 {
        if self.is_stiff() {
            0.0
        } else {
            0.5 * (self.a - 1.0) * (h * self.k()).exp()
        }
    }

    /// `c_s'(h)`.
    pub fn dcs(&self, h: f64) -> f64 {
        if self.is_stiff() {
            0.0
        } else {
            self.cs_dcs(h) / self.cs(h)
        }
    }

    /// Log-enthalpy h(ϱ) with integration constant 0.
    pub fn h_of_rho(&self, rho: f64) -> f64 {
        if self.is_stiff() {
            0.5 * rho.ln()
        } else {
            rho.powf(self.a - 1.0).ln_1p() / self.k()
        }
    }

    /// Inverse of `p(h)`.
    pub fn h_of_pressure(&self, p: f64) -> f64 {
        self.h_of_rho(p.powf(1.0 / self.a))
    }

    /// Upper end of the hyperbolic window `c_s <= 1` (infinite when stiff).
    pub fn h_max(&self) -> f64 {
        if self.is_stiff() {
            f64::INFINITY
        } else {
            (1.0 / self.a).ln_1p() / self.k()
        }
    }

    /// Enthalpy of the reference background: `c_s² = 1/2` for `A > 1`, `h = 0` when stiff.
    pub fn background_h(&self) -> f64 {
        if self.is_stiff() {
            0.0
        } else {
            (0.5 / self.a).ln_1p() / self.k()
        }
    }

    /// Rejects vacuum, non-finite h and sound speeds above light speed.
    pub fn check_admissible(&self, h: f64) -> Result<()> {
        if !h.is_finite() {
            return Err(Error::Inadmissible(format!("non-finite h = {h}")));
        }
        if self.is_stiff() {
            return Ok(());
        }
        let cs2 = self.cs2(h);
        if h <= 0.0 || cs2 <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "h = {h} reaches vacuum (c_s^2 = {cs2})"
            )));
        }
        if cs2 > CS2_CEILING {
            return Err(Error::Hyperbolicity { h, cs2 });
        }
        Ok(())
    }
}

/// Symmetric 3×3 matrix stored as `[00, 01, 02, 11, 12, 22]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3(pub [f64; 6]);

impl Sym3 {
    pub const MINKOWSKI: Sym3 = Sym3([-1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let k = match (a, b) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            _ => 5,
        };
        self.0[k]
    }

    pub fn to_array(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, x) in row.iter_mut().enumerate() {
                *x = self.get(a, b);
            }
        }
        m
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    }

    /// Cofactor inverse; `None` when the determinant is negligible against the entry scale.
    pub fn inverse(&self) -> Option<Sym3> {
        let [a, b, c, d, e, f] = self.0;
        let det = self.det();
        let scale = self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(3) {
            return None;
        }
        let r = 1.0 / det;
        Some(Sym3([
            (d * f - e * e) * r,
            (c * e - b * f) * r,
            (b * e - c * d) * r,
            (a * f - c * c) * r,
            (b * c - a * e) * r,
            (a * d - b * b) * r,
        ]))
    }

    /// Quadratic form `x^a M_ab y^b`.
    pub fn form(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += x[a] * self.get(a, b) * y[b];
            }
        }
        acc
    }
}

/// Minkowski metric diagonal `m_{αα}` (equal to `m^{αα}`).
pub const MINKOWSKI_DIAG: [f64; 3] = [-1.0, 1.0, 1.0];

/// `v⁰ = sqrt(e^{2h} + (v¹)² + (v²)²)`.
#[inline]
pub fn lift_point(h: f64, v1: f64, v2: f64) -> f64 {
    ((2.0 * h).exp() + v1 * v1 + v2 * v2).sqrt()
}

/// Normalized velocity `u = e^{-h} v` with `u⁰ = sqrt(1 + |ů|²)`.
#[inline]
pub fn normalized_velocity(h: f64, v1: f64, v2: f64) -> [f64; 3] {
    let e = (-h).exp();
    let (u1, u2) = (e * v1, e * v2);
    [(1.0 + u1 * u1 + u2 * u2).sqrt(), u1, u2]
}

/// Θ from `c_s²` and `e^{-2h}(v⁰)² = (u⁰)²`.
pub fn theta_point(cs2: f64, u0sq: f64) -> Result<f64> {
    let den = cs2 - (cs2 - 1.0) * u0sq;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Inadmissible(format!(
            "Θ denominator {den} is not positive (c_s^2 = {cs2})"
        )));
    }
    Ok(1.0 / den)
}

/// Contravariant acoustic metric `Θ(c_s² m + (c_s²-1) u⊗u)` with `u = e^{-h}v`.
pub fn metric_point(cs2: f64, u: &[f64; 3]) -> Result<(Sym3, f64)> {
    let theta = theta_point(cs2, u[0] * u[0])?;
    let d = cs2 - 1.0;
    let g = Sym3([
        -1.0,
        theta * d * u[0] * u[1],
        theta * d * u[0] * u[2],
        theta * (cs2 + d * u[1] * u[1]),
        theta * d * u[1] * u[2],
        theta * (cs2 + d * u[2] * u[2]),
    ]);
    Ok((g, theta))
}

/// Fluid state in the good variables; `v⁰` is always derived.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub h: ScalarField2D,
    pub v1: ScalarField2D,
    pub v2: ScalarField2D,
}

impl FluidState {
    pub fn new(h: ScalarField2D, v1: ScalarField2D, v2: ScalarField2D) -> Result<Self> {
        if h.grid() != v1.grid() || h.grid() != v2.grid() {
            return Err(Error::InvalidGrid("h, v1, v2 grids differ".into()));
        }
        h.check_finite("h")?;
        v1.check_finite("v1")?;
        v2.check_finite("v2")?;
        Ok(Self { h, v1, v2 })
    }

    /// Uniform state.
    pub fn constant(grid: Grid2D, h: f64, v1: f64, v2: f64) -> Self {
        Self {
            h: ScalarField2D::constant(grid, h),
            v1: ScalarField2D::constant(grid, v1),
            v2: ScalarField2D::constant(grid, v2),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.h.grid()
    }

    pub fn v0(&self) -> ScalarField2D {
        lift_velocity(&self.h, &self.v1, &self.v2)
    }

    /// Contravariant components `(v⁰, v¹, v²)`.
    pub fn v(&self) -> [ScalarField2D; 3] {
        [self.v0(), self.v1.clone(), self.v2.clone()]
    }

    /// Largest deviation of `e^{-2h} v^α v_α` from −1.
    pub fn constraint_defect(&self) -> f64 {
        let v0 = self.v0();
        let mut worst: f64 = 0.0;
        for k in 0..self.grid().len() {
            let h = self.h.values()[k];
            let (a, b, c) = (v0.values()[k], self.v1.values()[k], self.v2.values()[k]);
            let n = (-2.0 * h).exp() * (-a * a + b * b + c * c);
            worst = worst.max((n + 1.0).abs());
        }
        worst
    }

    pub fn check_admissible(&self, eos: &EquationOfState) -> Result<()> {
        for &h in self.h.values() {
            eos.check_admissible(h)?;
        }
        Ok(())
    }
}

/// Constraint lift of the time component.
pub fn lift_velocity(h: &ScalarField2D, v1: &ScalarField2D, v2: &ScalarField2D) -> ScalarField2D {
    let values = (0..h.grid().len())
        .map(|k| lift_point(h.values()[k], v1.values()[k], v2.values()[k]))
        .collect();
    ScalarField2D::from_vec_unchecked(*h.grid(), values)
}

pub fn compute_theta(state: &FluidState, eos: &EquationOfState) -> Result<ScalarField2D> {
    let g = *state.grid();
    let mut out = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let h = state.h.values()[k];
        eos.check_admissible(h)?;
        let u = normalized_velocity(h, state.v1.values()[k], state.v2.values()[k]);
        out.push(theta_point(eos.cs2(h), u[0] * u[0])?);
    }
    Ok(ScalarField2D::from_vec_unchecked(g, out))
}

/// Pointwise acoustic metric, its inverse and Θ.
#[derive(Debug, Clone)]
pub struct AcousticMetric {
    pub ginv: Vec<Sym3>,
    pub gcov: Vec<Sym3>,
    pub theta: ScalarField2D,
}

pub fn acoustic_metric(state: &FluidState, eos: &EquationOfState) -> Result<AcousticMetric> {
    let g = *state.grid();
    let mut ginv = Vec::with_capacity(g.len());
    let mut gcov = Vec::with_capacity(g.len());
    let mut theta = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let h = state.h.values()[k];
        eos.check_admissible(h)?;
        let u = normalized_velocity(h, state.v1.values()[k], state.v2.values()[k]);
        let (gi, th) = metric_point(eos.cs2(h), &u)?;
        let gc = gi.inverse().ok_or(Error::Singular {
            what: "acoustic metric".into(),
            index: k,
        })?;
        ginv.push(gi);
        gcov.push(gc);
        theta.push(th);
    }
    Ok(AcousticMetric {
        ginv,
        gcov,
        theta: ScalarField2D::from_vec_unchecked(g, theta),
    })
}
