//! Symmetric hyperbolic form of the equations in the unknowns `U = (p, e^{-h}v¹, e^{-h}v²)`
//! and its RK4 pseudospectral time integration.

use crate::error::{Error, Result};
use crate::field::{Axis, Grid2D, ScalarField2D};
use crate::thermo::{EquationOfState, FluidState};
use nalgebra::{Matrix3, Vector3};
use std::ops::ControlFlow;

pub const DEFAULT_CFL: f64 = 0.4;

/// The three coefficient matrices at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSystemPoint {
    pub a0: Matrix3<f64>,
    pub a1: Matrix3<f64>,
    pub a2: Matrix3<f64>,
}

/// Assembles `A⁰, A¹, A²` at a point with log-enthalpy `h` and spatial velocity `(v¹, v²)`.
pub fn assemble_point(
    eos: &EquationOfState,
    h: f64,
    v1: f64,
    v2: f64,
) -> Result<SymmetricSystemPoint> {
    let cs2 = eos.cs2(h);
    if !(cs2 > 0.0) {
        return Err(Error::Inadmissible(format!("c_s = 0 at h = {h}")));
    }
    let rp = eos.rho(h) + eos.pressure(h);
    let e = (-h).exp();
    let u = [(1.0 + e * e * (v1 * v1 + v2 * v2)).sqrt(), e * v1, e * v2];
    let proj = |i: usize, j: usize| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - u[i] * u[j] / (u[0] * u[0])
    };
    let w00 = 1.0 / (rp * rp * cs2);
    let mut a0 = Matrix3::zeros();
    a0[(0, 0)] = w00 * u[0];
    for i in 1..3 {
        a0[(0, i)] = u[i] / (rp * u[0]);
        a0[(i, 0)] = a0[(0, i)];
        for j in 1..3 {
            a0[(i, j)] = u[0] * proj(i, j);
        }
    }
    let spatial = |k: usize| {
        let mut a = Matrix3::zeros();
        a[(0, 0)] = w00 * u[k];
        a[(0, k)] = 1.0 / rp;
        a[(k, 0)] = 1.0 / rp;
        for i in 1..3 {
            for j in 1..3 {
                a[(i, j)] = u[k] * proj(i, j);
            }
        }
        a
    };
    Ok(SymmetricSystemPoint {
        a0,
        a1: spatial(1),
        a2: spatial(2),
    })
}

/// Matrices at every grid point.
pub fn assemble_matrices(
    state: &FluidState,
    eos: &EquationOfState,
) -> Result<Vec<SymmetricSystemPoint>> {
    (0..state.grid().len())
        .map(|k| {
            assemble_point(
                eos,
                state.h.values()[k],
                state.v1.values()[k],
                state.v2.values()[k],
            )
        })
        .collect()
}

/// Evolved unknowns `(p, e^{-h}v¹, e^{-h}v²)`.
pub fn to_unknowns(state: &FluidState, eos: &EquationOfState) -> [ScalarField2D; 3] {
    let p = state.h.map(|h| eos.pressure(h));
    let u1 = state.h.zip_map(&state.v1, |h, v| (-h).exp() * v);
    let u2 = state.h.zip_map(&state.v2, |h, v| (-h).exp() * v);
    [p, u1, u2]
}

/// Inverse of [`to_unknowns`] followed by the constraint lift.
pub fn from_unknowns(u: &[ScalarField2D; 3], eos: &EquationOfState) -> Result<FluidState> {
    if let Some(k) = u[0].values().iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::Inadmissible(format!(
            "pressure {} at index {k}",
            u[0].values()[k]
        )));
    }
    let h = u[0].map(|p| eos.h_of_pressure(p));
    let v1 = h.zip_map(&u[1], |h, x| h.exp() * x);
    let v2 = h.zip_map(&u[2], |h, x| h.exp() * x);
    FluidState::new(h, v1, v2)
}

/// `∂_t U = -(A⁰)^{-1}(A¹∂₁U + A²∂₂U)`, spectral derivatives, dealiased.
pub fn rhs(state: &FluidState, eos: &EquationOfState) -> Result<[ScalarField2D; 3]> {
    let u = to_unknowns(state, eos);
    let d1: Vec<ScalarField2D> = u.iter().map(|f| f.derivative(Axis::X1)).collect::<Result<_>>()?;
    let d2: Vec<ScalarField2D> = u.iter().map(|f| f.derivative(Axis::X2)).collect::<Result<_>>()?;
    let g = *state.grid();
    let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for k in 0..g.len() {
        let m = assemble_point(
            eos,
            state.h.values()[k],
            state.v1.values()[k],
            state.v2.values()[k],
        )?;
        let du1 = Vector3::new(d1[0].values()[k], d1[1].values()[k], d1[2].values()[k]);
        let du2 = Vector3::new(d2[0].values()[k], d2[1].values()[k], d2[2].values()[k]);
        let b = -(m.a1 * du1 + m.a2 * du2);
        let x = m
            .a0
            .cholesky()
            .ok_or(Error::Singular {
                what: "A0".into(),
                index: k,
            })?
            .solve(&b);
        for c in 0..3 {
            out[c][k] = x[c];
        }
    }
    let [a, b, c] = out;
    Ok([
        ScalarField2D::new(g, a)?.dealiased(),
        ScalarField2D::new(g, b)?.dealiased(),
        ScalarField2D::new(g, c)?.dealiased(),
    ])
}

/// Time derivatives `(∂_t h, ∂_t v¹, ∂_t v²)` implied by [`rhs`].
pub fn state_time_derivative(
    state: &FluidState,
    eos: &EquationOfState,
) -> Result<[ScalarField2D; 3]> {
    let [dp, du1, du2] = rhs(state, eos)?;
    let g = *state.grid();
    let mut ht = vec![0.0; g.len()];
    let mut v1t = vec![0.0; g.len()];
    let mut v2t = vec![0.0; g.len()];
    for k in 0..g.len() {
        let h = state.h.values()[k];
        let dh = dp.values()[k] / (eos.pressure(h) + eos.rho(h));
        let e = h.exp();
        ht[k] = dh;
        v1t[k] = e * du1.values()[k] + state.v1.values()[k] * dh;
        v2t[k] = e * du2.values()[k] + state.v2.values()[k] * dh;
    }
    Ok([
        ScalarField2D::new(g, ht)?,
        ScalarField2D::new(g, v1t)?,
        ScalarField2D::new(g, v2t)?,
    ])
}

/// `dt = C_cfl · min(dx, dy)`; characteristic speeds never exceed 1.
pub fn cfl_dt(grid: &Grid2D, c_cfl: f64) -> f64 {
    c_cfl * grid.dx().min(grid.dy())
}

/// Integration options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub cfl: f64,
    /// Exponential filter `exp(-36 η^36)` applied to `U` after each step.
    pub filter: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            filter: false,
        }
    }
}

/// Receives every accepted slice.
pub trait Observer {
    fn observe(&mut self, step: usize, time: f64, state: &FluidState) -> ControlFlow<()>;
}

impl<F: FnMut(usize, f64, &FluidState) -> ControlFlow<()>> Observer for F {
    fn observe(&mut self, step: usize, time: f64, state: &FluidState) -> ControlFlow<()> {
        self(step, time, state)
    }
}

/// Observer that never aborts.
pub struct Silent;

impl Observer for Silent {
    fn observe(&mut self, _: usize, _: f64, _: &FluidState) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

/// Uniformly sampled sequence of states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<FluidState>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, states: Vec<FluidState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::TooFewSlices { need: 1, have: 0 });
        }
        if !(dt > 0.0) {
            return Err(Error::OutOfRange {
                what: "dt".into(),
                detail: format!("{dt} must be positive"),
            });
        }
        Ok(Self { t0, dt, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn grid(&self) -> &Grid2D {
        self.states[0].grid()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn last(&self) -> &FluidState {
        self.states.last().expect("nonempty trajectory")
    }

    /// Sub-trajectory over slices `start..end`.
    pub fn segment(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::OutOfRange {
                what: "segment".into(),
                detail: format!("{start}..{end} of {}", self.len()),
            });
        }
        Ok(Self {
            t0: self.time(start),
            dt: self.dt,
            states: self.states[start..end].to_vec(),
        })
    }

    /// Ensures `n` has `half_width` neighbours on each side.
    pub fn check_interior(&self, n: usize, half_width: usize) -> Result<()> {
        if self.len() < 2 * half_width + 1 {
            return Err(Error::TooFewSlices {
                need: 2 * half_width + 1,
                have: self.len(),
            });
        }
        if n < half_width || n + half_width >= self.len() {
            return Err(Error::BoundarySlice { n, len: self.len() });
        }
        Ok(())
    }
}

fn combine(base: &[ScalarField2D; 3], k: &[ScalarField2D; 3], a: f64) -> [ScalarField2D; 3] {
    let mut out = base.clone();
    for c in 0..3 {
        out[c].axpy(a, &k[c]);
    }
    out
}

fn rhs_u(u: &[ScalarField2D; 3], eos: &EquationOfState) -> Result<[ScalarField2D; 3]> {
    rhs(&from_unknowns(u, eos)?, eos)
}

/// One classical RK4 step (negative `dt` integrates backwards).
pub fn step_rk4(state: &FluidState, dt: f64, eos: &EquationOfState) -> Result<FluidState> {
    let u = to_unknowns(state, eos);
    from_unknowns(&rk4_unknowns(&u, dt, eos)?, eos)
}

fn rk4_unknowns(u: &[ScalarField2D; 3], dt: f64, eos: &EquationOfState) -> Result<[ScalarField2D; 3]> {
    let k1 = rhs_u(u, eos)?;
    let k2 = rhs_u(&combine(u, &k1, 0.5 * dt), eos)?;
    let k3 = rhs_u(&combine(u, &k2, 0.5 * dt), eos)?;
    let k4 = rhs_u(&combine(u, &k3, dt), eos)?;
    let mut out = u.clone();
    for c in 0..3 {
        out[c].axpy(dt / 6.0, &k1[c]);
        out[c].axpy(dt / 3.0, &k2[c]);
        out[c].axpy(dt / 3.0, &k3[c]);
        out[c].axpy(dt / 6.0, &k4[c]);
    }
    Ok(out)
}

/// Advances `steps` fixed steps of size `dt`, recording every slice.
pub fn evolve_steps(
    initial: &FluidState,
    dt: f64,
    steps: usize,
    eos: &EquationOfState,
    opts: &EvolveOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    initial.check_admissible(eos)?;
    let mut states = vec![initial.clone()];
    if observer.observe(0, 0.0, initial).is_break() {
        return Err(Error::Aborted { step: 0 });
    }
    let mut u = to_unknowns(initial, eos);
    for step in 1..=steps {
        let time = step as f64 * dt;
        let blowup = |e: Error| Error::Blowup {
            step,
            time,
            detail: e.to_string(),
        };
        u = rk4_unknowns(&u, dt, eos).map_err(blowup)?;
        if opts.filter {
            for f in u.iter_mut() {
                *f = f.spectrum().exp_filtered(36.0, 36).to_field();
            }
        }
        if let Some(c) = u.iter().position(|f| !f.is_finite()) {
            return Err(Error::Blowup {
                step,
                time,
                detail: format!("non-finite unknown U[{c}]"),
            });
        }
        let state = from_unknowns(&u, eos).map_err(blowup)?;
        state.check_admissible(eos).map_err(blowup)?;
        if observer.observe(step, time, &state).is_break() {
            return Err(Error::Aborted { step });
        }
        states.push(state);
    }
    Trajectory::new(0.0, dt, states)
}

/// Evolves to `t_final` with the largest uniform step not exceeding the CFL step.
pub fn evolve(
    initial: &FluidState,
    t_final: f64,
    eos: &EquationOfState,
    opts: &EvolveOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    if !(t_final > 0.0) {
        return Err(Error::OutOfRange {
            what: "T_final".into(),
            detail: format!("{t_final} must be positive"),
        });
    }
    let dt_max = cfl_dt(initial.grid(), opts.cfl);
    let steps = (t_final / dt_max - 1e-9).ceil().max(1.0) as usize;
    evolve_steps(initial, t_final / steps as f64, steps, eos, opts, observer)
}
