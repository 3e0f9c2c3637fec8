//! Space-time elliptic operator `Id − P`, `P = (m^{βγ} + 2e^{-2h}v^βv^γ)∂²_{βγ}`, and the
//! velocity splitting `v = v₊ + v₋` with `(Id − P)v₋ = ε^{αβγ}∂_β w_γ`.
//!
//! The slab is extended to three times its length by tapered reflections and periodized in
//! time; derivatives are Fourier-spectral in all three directions.

use crate::error::{Error, Result};
use crate::field::{plan, plan_1d, sobolev_norm, Grid2D, ScalarField2D};
use crate::hyperbolic::Trajectory;
use crate::jet::{Jet, StateJets};
use crate::thermo::{normalized_velocity, FluidState, Sym3, MINKOWSKI_DIAG as M};
use crate::vorticity::{perm_sign, VortexPoint};
use num_complex::Complex64;
use serde::Serialize;

/// `P^{βγ} = m^{βγ} + 2 u^β u^γ` for the normalized velocity `u = e^{-h}v`.
pub fn p_matrix_point(u: &[f64; 3]) -> Sym3 {
    let mut p = [0.0; 6];
    let mut k = 0;
    for a in 0..3 {
        for b in a..3 {
            let m = if a == b { M[a] } else { 0.0 };
            p[k] = m + 2.0 * u[a] * u[b];
            k += 1;
        }
    }
    Sym3(p)
}

/// Leading principal minors `(p1, p2, p3)` of `P` in closed form.
pub fn minors_point(h: f64, v1: f64, v2: f64) -> [f64; 3] {
    let e2 = (-2.0 * h).exp();
    let v0sq = (2.0 * h).exp() + v1 * v1 + v2 * v2;
    [
        -1.0 + 2.0 * e2 * v0sq,
        -1.0 + 2.0 * e2 * (v0sq - v1 * v1),
        -1.0 + 2.0 * e2 * (v0sq - v1 * v1 - v2 * v2),
    ]
}

pub fn ellipticity_minors(state: &FluidState) -> [ScalarField2D; 3] {
    let g = *state.grid();
    let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for k in 0..g.len() {
        let m = minors_point(state.h.values()[k], state.v1.values()[k], state.v2.values()[k]);
        for c in 0..3 {
            out[c][k] = m[c];
        }
    }
    out.map(|v| ScalarField2D::from_vec_unchecked(g, v))
}

/// Real data on `nt` uniformly spaced time levels of a spatial grid, `[t][j][i]` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabField {
    pub grid: Grid2D,
    pub nt: usize,
    pub dt: f64,
    pub t0: f64,
    pub data: Vec<f64>,
}

impl SlabField {
    pub fn zeros(grid: Grid2D, nt: usize, dt: f64, t0: f64) -> Self {
        Self {
            grid,
            nt,
            dt,
            t0,
            data: vec![0.0; nt * grid.len()],
        }
    }

    /// Samples `f(t, x1, x2)`.
    pub fn from_fn(grid: Grid2D, nt: usize, dt: f64, t0: f64, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut s = Self::zeros(grid, nt, dt, t0);
        for n in 0..nt {
            let t = t0 + n as f64 * dt;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    s.data[n * grid.len() + grid.idx(i, j)] = f(t, grid.x(i), grid.y(j));
                }
            }
        }
        s
    }

    pub fn slice(&self, n: usize) -> ScalarField2D {
        let len = self.grid.len();
        ScalarField2D::from_vec_unchecked(self.grid, self.data[n * len..(n + 1) * len].to_vec())
    }

    fn set_slice(&mut self, n: usize, f: &ScalarField2D) {
        let len = self.grid.len();
        self.data[n * len..(n + 1) * len].copy_from_slice(f.values());
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut s = self.clone();
        s.data.iter_mut().for_each(|x| *x *= a);
        s
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.data.iter_mut().zip(&x.data).for_each(|(y, xv)| *y += a * xv);
    }
}

/// Slot in the extended periodic slab: reflected physical slice and taper weight.
fn extension_map(nt: usize, e: usize) -> (usize, f64) {
    let l = nt - 1;
    if e < l {
        (l - e, e as f64 / l as f64)
    } else if e <= 2 * l {
        (e - l, 1.0)
    } else {
        let m = e - 2 * l;
        (l - m, 1.0 - m as f64 / l as f64)
    }
}

/// Number of time levels of the periodized extension of an `nt`-level slab.
pub fn extended_len(nt: usize) -> usize {
    3 * (nt - 1)
}

/// Offset of the physical slab's first level inside the extension.
pub fn extension_offset(nt: usize) -> usize {
    nt - 1
}

/// Tapered, reflected, periodized extension of a slab field.
pub fn extend_slab(f: &SlabField) -> SlabField {
    let ne = extended_len(f.nt);
    let t0 = f.t0 - (f.nt - 1) as f64 * f.dt;
    let mut out = SlabField::zeros(f.grid, ne, f.dt, t0);
    for e in 0..ne {
        let (src, w) = extension_map(f.nt, e);
        out.set_slice(e, &(&f.slice(src) * w));
    }
    out
}

/// Variable coefficients of `P` on a periodic space-time grid.
#[derive(Debug, Clone)]
pub struct SlabCoefficients {
    pub grid: Grid2D,
    pub nt: usize,
    pub dt: f64,
    pub t0: f64,
    pub p: Vec<Sym3>,
    pub pbar: Sym3,
}

impl SlabCoefficients {
    /// Frozen coefficients `P` everywhere.
    pub fn constant(grid: Grid2D, nt: usize, dt: f64, p: Sym3) -> Self {
        Self {
            grid,
            nt,
            dt,
            t0: 0.0,
            p: vec![p; nt * grid.len()],
            pbar: p,
        }
    }

    /// Coefficients of slices `n0..=n1` extended by tapering `e^{-h}v̊` and re-lifting.
    pub fn extended(traj: &Trajectory, n0: usize, n1: usize) -> Result<Self> {
        check_slab(traj, n0, n1, 0)?;
        let nt = n1 - n0 + 1;
        let g = *traj.grid();
        let ne = extended_len(nt);
        let mut p = Vec::with_capacity(ne * g.len());
        let mut acc = [0.0; 6];
        for e in 0..ne {
            let (src, w) = extension_map(nt, e);
            let s = &traj.states[n0 + src];
            for k in 0..g.len() {
                let u = normalized_velocity(s.h.values()[k], s.v1.values()[k], s.v2.values()[k]);
                let (u1, u2) = (w * u[1], w * u[2]);
                let pk = p_matrix_point(&[(1.0 + u1 * u1 + u2 * u2).sqrt(), u1, u2]);
                for c in 0..6 {
                    acc[c] += pk.0[c];
                }
                p.push(pk);
            }
        }
        let count = p.len() as f64;
        Ok(Self {
            grid: g,
            nt: ne,
            dt: traj.dt,
            t0: traj.time(n0) - (nt - 1) as f64 * traj.dt,
            p,
            pbar: Sym3(acc.map(|x| x / count)),
        })
    }
}

fn check_slab(traj: &Trajectory, n0: usize, n1: usize, half: usize) -> Result<()> {
    if n1 < n0 || n1 - n0 + 1 < 8 {
        return Err(Error::TooFewSlices {
            need: 8,
            have: (n1 + 1).saturating_sub(n0),
        });
    }
    if n0 < half || n1 + half >= traj.len() {
        return Err(Error::BoundarySlice {
            n: if n0 < half { n0 } else { n1 },
            len: traj.len(),
        });
    }
    Ok(())
}

/// Three-dimensional FFT on `[t][j][i]` data, forward normalized by the point count.
struct SpaceTimeFft {
    grid: Grid2D,
    nt: usize,
}

impl SpaceTimeFft {
    fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let len = self.grid.len();
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let f2 = plan(self.grid.nx, self.grid.ny);
        for n in 0..self.nt {
            f2.transform(&mut buf[n * len..(n + 1) * len], true);
        }
        self.time_pass(&mut buf, true);
        let s = 1.0 / (self.nt * len) as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        let len = self.grid.len();
        self.time_pass(&mut buf, false);
        let f2 = plan(self.grid.nx, self.grid.ny);
        for n in 0..self.nt {
            f2.transform(&mut buf[n * len..(n + 1) * len], false);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    fn time_pass(&self, buf: &mut [Complex64], forward: bool) {
        let len = self.grid.len();
        let nt = self.nt;
        let (fwd, inv) = plan_1d(nt);
        let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
        for n in 0..nt {
            for k in 0..len {
                t[k * nt + n] = buf[n * len + k];
            }
        }
        if forward {
            fwd.process(&mut t);
        } else {
            inv.process(&mut t);
        }
        for n in 0..nt {
            for k in 0..len {
                buf[n * len + k] = t[k * nt + n];
            }
        }
    }
}

/// Wavenumbers per axis; `odd` entries are zeroed at the Nyquist index.
struct Wavenumbers {
    k: [Vec<f64>; 3],
    odd: [Vec<f64>; 3],
}

impl Wavenumbers {
    fn new(grid: &Grid2D, nt: usize, dt: f64) -> Self {
        let axis = |n: usize, l: f64| -> (Vec<f64>, Vec<f64>) {
            let k: Vec<f64> = (0..n)
                .map(|i| 2.0 * std::f64::consts::PI / l * Grid2D::mode(i, n) as f64)
                .collect();
            let odd = k
                .iter()
                .enumerate()
                .map(|(i, &x)| if n % 2 == 0 && i == n / 2 { 0.0 } else { x })
                .collect();
            (k, odd)
        };
        let (kt, ot) = axis(nt, nt as f64 * dt);
        let (kx, ox) = axis(grid.nx, grid.lx);
        let (ky, oy) = axis(grid.ny, grid.ly);
        Self {
            k: [kt, kx, ky],
            odd: [ot, ox, oy],
        }
    }

    /// Multiplier of `∂_a∂_b` at mode `(n, i, j)`.
    #[inline]
    fn second(&self, a: usize, b: usize, idx: [usize; 3]) -> f64 {
        if a == b {
            -self.k[a][idx[a]].powi(2)
        } else {
            -self.odd[a][idx[a]] * self.odd[b][idx[b]]
        }
    }

    #[inline]
    fn first(&self, a: usize, idx: [usize; 3]) -> f64 {
        self.odd[a][idx[a]]
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Discrete `Id − P` with its constant-coefficient preconditioner.
struct EllipticOperator<'a> {
    coeffs: &'a SlabCoefficients,
    fft: SpaceTimeFft,
    wn: Wavenumbers,
    symbol: Vec<f64>,
}

impl<'a> EllipticOperator<'a> {
    fn new(coeffs: &'a SlabCoefficients) -> Self {
        let fft = SpaceTimeFft {
            grid: coeffs.grid,
            nt: coeffs.nt,
        };
        let wn = Wavenumbers::new(&coeffs.grid, coeffs.nt, coeffs.dt);
        let g = coeffs.grid;
        let mut symbol = Vec::with_capacity(coeffs.nt * g.len());
        for n in 0..coeffs.nt {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let idx = [n, i, j];
                    let s: f64 = PAIRS
                        .iter()
                        .enumerate()
                        .map(|(c, &(a, b))| {
                            let mult = if a == b { 1.0 } else { 2.0 };
                            mult * coeffs.pbar.0[c] * wn.second(a, b, idx)
                        })
                        .sum();
                    symbol.push(1.0 - s);
                }
            }
        }
        Self {
            coeffs,
            fft,
            wn,
            symbol,
        }
    }

    fn for_modes(&self, spec: &[Complex64], m: impl Fn([usize; 3]) -> f64) -> Vec<f64> {
        let g = self.coeffs.grid;
        let mut out = spec.to_vec();
        let mut k = 0;
        for n in 0..self.coeffs.nt {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    out[k] *= m([n, i, j]);
                    k += 1;
                }
            }
        }
        self.fft.inverse(out)
    }

    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.fft.forward(x);
        PAIRS
            .iter()
            .map(|&(a, b)| self.for_modes(&spec, |idx| self.wn.second(a, b, idx)))
            .collect()
    }

    fn time_derivative(&self, x: &[f64], order: u32) -> Vec<f64> {
        let mut out = self.fft.forward(x);
        let g = self.coeffs.grid;
        let mut k = 0;
        for n in 0..self.coeffs.nt {
            let f = match order {
                1 => Complex64::new(0.0, self.wn.first(0, [n, 0, 0])),
                _ => Complex64::new(-self.wn.k[0][n].powi(2), 0.0),
            };
            for _ in 0..g.len() {
                out[k] *= f;
                k += 1;
            }
        }
        self.fft.inverse(out)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d2 = self.second_derivatives(x);
        let p = &self.coeffs.p;
        (0..x.len())
            .map(|k| {
                let mut acc = x[k];
                for (c, &(a, b)) in PAIRS.iter().enumerate() {
                    let mult = if a == b { 1.0 } else { 2.0 };
                    acc -= mult * p[k].0[c] * d2[c][k];
                }
                acc
            })
            .collect()
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut spec = self.fft.forward(r);
        spec.iter_mut().zip(&self.symbol).for_each(|(c, s)| *c /= *s);
        self.fft.inverse(spec)
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub restart: usize,
    /// Iteration cap; `None` uses `10·(nt + nx)`.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            restart: 40,
            max_iter: None,
        }
    }
}

/// Solver diagnostics, serialized per component.
#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    pub slab_extent: [f64; 2],
    pub preconditioner_symbol_min: f64,
    pub residual_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned restarted GMRES; returns `(x, iterations, relative residual history)`.
fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, usize, Vec<f64>, bool) {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    let mut history = vec![if bnorm == 0.0 { 0.0 } else { 1.0 }];
    if bnorm == 0.0 {
        return (x, 0, history, true);
    }
    let mut iters = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = dot(&r, &r).sqrt();
        let rel = beta / bnorm;
        *history.last_mut().expect("history") = rel;
        if rel <= tol {
            return (x, iters, history, true);
        }
        if iters >= max_iter {
            return (x, iters, history, false);
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut gvec = vec![beta];
        let mut inner = 0;
        while inner < restart && iters < max_iter {
            let z = precond(&basis[inner]);
            let mut w = apply(&z);
            let mut col = vec![0.0; inner + 2];
            for (k, q) in basis.iter().enumerate() {
                col[k] = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= col[k] * qi);
            }
            let wn = dot(&w, &w).sqrt();
            col[inner + 1] = wn;
            for k in 0..inner {
                let t = cs[k] * col[k] + sn[k] * col[k + 1];
                col[k + 1] = -sn[k] * col[k] + cs[k] * col[k + 1];
                col[k] = t;
            }
            let denom = col[inner].hypot(col[inner + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[inner] / denom, col[inner + 1] / denom) };
            col[inner] = denom;
            col[inner + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            gvec.push(-s * gvec[inner]);
            gvec[inner] *= c;
            hess.push(col);
            inner += 1;
            iters += 1;
            let est = gvec[inner].abs() / bnorm;
            history.push(est);
            if est <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; inner];
        for k in (0..inner).rev() {
            let mut acc = gvec[k];
            for m in k + 1..inner {
                acc -= hess[m][k] * y[m];
            }
            y[k] = acc / hess[k][k];
        }
        let mut update = vec![0.0; n];
        for (k, yk) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[k]).for_each(|(u, q)| *u += yk * q);
        }
        let dz = precond(&update);
        x.iter_mut().zip(&dz).for_each(|(xi, d)| *xi += d);
    }
}

/// Solves `(Id − P)f = rhs` on the periodic grid of `coeffs`.
pub fn solve_periodic(
    coeffs: &SlabCoefficients,
    rhs: &SlabField,
    opts: &SolveOptions,
) -> Result<(SlabField, SolverDiagnostics)> {
    let op = EllipticOperator::new(coeffs);
    let max_iter = opts
        .max_iter
        .unwrap_or(10 * (coeffs.nt + coeffs.grid.nx));
    let symbol_min = op.symbol.iter().cloned().fold(f64::INFINITY, f64::min);
    let (x, iterations, history, converged) = gmres(
        &|v| op.apply(v),
        &|v| op.precondition(v),
        &rhs.data,
        opts.tol,
        opts.restart,
        max_iter,
    );
    let final_residual = *history.last().expect("history");
    if !converged {
        return Err(Error::SolverCap {
            iterations,
            residual: final_residual,
            symbol_min,
        });
    }
    let sol = SlabField {
        data: x,
        ..rhs.clone()
    };
    Ok((
        sol,
        SolverDiagnostics {
            iterations,
            final_residual,
            slab_extent: [coeffs.t0, coeffs.t0 + coeffs.nt as f64 * coeffs.dt],
            preconditioner_symbol_min: symbol_min,
            residual_history: history,
        },
    ))
}

/// Applies `Id − P` (useful for residual checks).
pub fn apply_operator(coeffs: &SlabCoefficients, f: &SlabField) -> SlabField {
    let op = EllipticOperator::new(coeffs);
    SlabField {
        data: op.apply(&f.data),
        ..f.clone()
    }
}

/// `ε^{αβγ}∂_β w_γ` at a point, with `w_γ = ε_{γμν}∂^μ v^ν` in the symbol convention.
///
/// This equals `∂_κ(∂^α v^κ − ∂^κ v^α)` and is `−ε^{αβγ}∂_β(m_{γδ}w^δ)`.
pub fn curl_w_point(vp: &VortexPoint) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, o) in out.iter_mut().enumerate() {
        for b in 0..3 {
            for c in 0..3 {
                *o -= perm_sign(a, b, c) * M[c] * vp.dw[c][b];
            }
        }
    }
    out
}

/// `ε^{αβγ}∂_β w_γ` on slices `n0..=n1`.
pub fn curl_w_rhs(traj: &Trajectory, n0: usize, n1: usize) -> Result<[SlabField; 3]> {
    check_slab(traj, n0, n1, 2)?;
    let g = *traj.grid();
    let nt = n1 - n0 + 1;
    let mut out: [SlabField; 3] = std::array::from_fn(|_| SlabField::zeros(g, nt, traj.dt, traj.time(n0)));
    for n in n0..=n1 {
        let jets = StateJets::at(traj, n, 2)?;
        for k in 0..g.len() {
            let p = jets.point(k);
            let c = curl_w_point(&VortexPoint::from_point(&p, 2));
            for a in 0..3 {
                out[a].data[(n - n0) * g.len() + k] = c[a];
            }
        }
    }
    Ok(out)
}

/// Solution `v₋` on a slab, with spectral time derivatives.
#[derive(Debug, Clone)]
pub struct VMinus {
    pub n0: usize,
    pub n1: usize,
    /// Extended-slab solution and its first and second time derivatives, per component.
    pub ext: [[SlabField; 3]; 3],
    pub rhs_ext: [SlabField; 3],
    pub diagnostics: [SolverDiagnostics; 3],
}

impl VMinus {
    fn ext_index(&self, n: usize) -> usize {
        extension_offset(self.n1 - self.n0 + 1) + (n - self.n0)
    }

    pub fn contains(&self, n: usize) -> bool {
        n >= self.n0 && n <= self.n1
    }

    /// `v₋^α` at trajectory slice `n`.
    pub fn value(&self, alpha: usize, n: usize) -> ScalarField2D {
        self.ext[alpha][0].slice(self.ext_index(n))
    }

    pub fn dt_value(&self, alpha: usize, n: usize) -> ScalarField2D {
        self.ext[alpha][1].slice(self.ext_index(n))
    }

    /// Second-order jet of `v₋^α` at slice `n`.
    pub fn jet(&self, alpha: usize, n: usize) -> Jet {
        let e = self.ext_index(n);
        let d: Vec<ScalarField2D> = (0..3).map(|o| self.ext[alpha][o].slice(e)).collect();
        Jet::from_time_derivatives(&d, 2)
    }

    /// Curl of `w` (the right-hand side) at slice `n`.
    pub fn rhs(&self, alpha: usize, n: usize) -> ScalarField2D {
        self.rhs_ext[alpha].slice(self.ext_index(n))
    }
}

/// Solves for `v₋` on slices `n0..=n1` given the right-hand side on those slices.
pub fn solve_vminus(
    traj: &Trajectory,
    n0: usize,
    n1: usize,
    rhs: &[SlabField; 3],
    opts: &SolveOptions,
) -> Result<VMinus> {
    check_slab(traj, n0, n1, 0)?;
    let coeffs = SlabCoefficients::extended(traj, n0, n1)?;
    let op = EllipticOperator::new(&coeffs);
    let mut ext = Vec::new();
    let mut diags = Vec::new();
    let mut rhs_ext = Vec::new();
    for f in rhs.iter() {
        let fe = extend_slab(f);
        let (sol, d) = solve_periodic(&coeffs, &fe, opts)?;
        let dt1 = SlabField {
            data: op.time_derivative(&sol.data, 1),
            ..sol.clone()
        };
        let dt2 = SlabField {
            data: op.time_derivative(&sol.data, 2),
            ..sol.clone()
        };
        ext.push([sol, dt1, dt2]);
        diags.push(d);
        rhs_ext.push(fe);
    }
    Ok(VMinus {
        n0,
        n1,
        ext: to_array3(ext),
        rhs_ext: to_array3(rhs_ext),
        diagnostics: to_array3(diags),
    })
}

fn to_array3<T>(v: Vec<T>) -> [T; 3] {
    v.try_into()
        .unwrap_or_else(|_| panic!("expected three components"))
}

/// Ratios of the elliptic estimate for one index `a`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRatio {
    pub a: f64,
    pub vminus_over_w: f64,
    pub dt_vminus_over_w: f64,
}

/// `v₊ = v − v₋` on the slab plus the estimate table.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub vplus: Vec<[ScalarField2D; 3]>,
    pub ratios: Vec<EstimateRatio>,
}

fn vector_sobolev(f: &[ScalarField2D], s: f64) -> Result<f64> {
    let mut acc = 0.0;
    for c in f {
        acc += sobolev_norm(c, s)?.powi(2);
    }
    Ok(acc.sqrt())
}

/// Splits `v` on the slab and reports `‖v₋‖_{H^{2+a}}/‖w‖_{H^{1+a}}` and
/// `‖∂_t v₋‖_{H^{1+a}}/‖w‖_{H^{1+a}}` (maximum over the slab) for `a ∈ {0, 1/4, 1/2}`.
pub fn decompose(traj: &Trajectory, vm: &VMinus) -> Result<Decomposition> {
    let mut vplus = Vec::new();
    let mut ws = Vec::new();
    for n in vm.n0..=vm.n1 {
        let v = traj.states[n].v();
        vplus.push(std::array::from_fn(|a| &v[a] - &vm.value(a, n)));
        let jets = StateJets::at(traj, n, 1)?;
        ws.push(crate::vorticity::vorticity_from_jets(&jets)?);
    }
    let mut ratios = Vec::new();
    for a in [0.0, 0.25, 0.5] {
        let (mut r1, mut r2) = (0.0f64, 0.0f64);
        for (k, n) in (vm.n0..=vm.n1).enumerate() {
            let wn = vector_sobolev(&ws[k], 1.0 + a)?;
            if wn == 0.0 {
                continue;
            }
            let vmn: Vec<ScalarField2D> = (0..3).map(|c| vm.value(c, n)).collect();
            let dvm: Vec<ScalarField2D> = (0..3).map(|c| vm.dt_value(c, n)).collect();
            r1 = r1.max(vector_sobolev(&vmn, 2.0 + a)? / wn);
            r2 = r2.max(vector_sobolev(&dvm, 1.0 + a)? / wn);
        }
        ratios.push(EstimateRatio {
            a,
            vminus_over_w: r1,
            dt_vminus_over_w: r2,
        });
    }
    Ok(Decomposition { vplus, ratios })
}
