//! Null foliations of the acoustic metric, null frames and connection coefficients.
//!
//! A foliation with direction `θ = ±e_a` is written in local coordinates
//! `(t, y1, y2) = (t, θ⊥·x, θ·x)`, `θ⊥ = (θ2, −θ1)`, as the graph `y2 = φ(t, y1)`.
//! Frames and connection coefficients are expressed in these local coordinates.

use crate::error::{Error, Result};
use crate::field::{plan_1d, Grid2D, ScalarField2D};
use crate::hyperbolic::Trajectory;
use crate::jet::Jet;
use crate::thermo::{acoustic_metric, EquationOfState, FluidState, Sym3};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

/// Axis-aligned unit direction `θ = sign·e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Direction {
    pub axis: usize,
    pub sign: f64,
}

impl Direction {
    pub fn new(axis: usize, sign: f64) -> Result<Self> {
        if axis > 1 || (sign != 1.0 && sign != -1.0) {
            return Err(Error::OutOfRange {
                what: "foliation direction".into(),
                detail: format!("axis {axis}, sign {sign}"),
            });
        }
        Ok(Self { axis, sign })
    }

    /// Accepts only the four axis-aligned unit vectors.
    pub fn from_vector(theta: [f64; 2]) -> Result<Self> {
        match theta {
            [x, y] if y == 0.0 && (x == 1.0 || x == -1.0) => Self::new(0, x),
            [x, y] if x == 0.0 && (y == 1.0 || y == -1.0) => Self::new(1, y),
            _ => Err(Error::OutOfRange {
                what: "foliation direction".into(),
                detail: format!("{theta:?} is not an axis-aligned unit vector"),
            }),
        }
    }

    pub fn theta(&self) -> [f64; 2] {
        let mut t = [0.0; 2];
        t[self.axis] = self.sign;
        t
    }

    pub fn perp_axis(&self) -> usize {
        1 - self.axis
    }

    /// Sign of `θ⊥` along the transverse axis.
    pub fn perp_sign(&self) -> f64 {
        if self.axis == 1 {
            self.sign
        } else {
            -self.sign
        }
    }

    /// Global index and sign of each local coordinate.
    fn local_map(&self) -> ([usize; 3], [f64; 3]) {
        ([0, 1 + self.perp_axis(), 1 + self.axis], [1.0, self.perp_sign(), self.sign])
    }

    /// Converts local components of a vector to global `(t, x1, x2)` components.
    pub fn to_global(&self, v: &[f64; 3]) -> [f64; 3] {
        let (p, s) = self.local_map();
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[p[i]] = s[i] * v[i];
        }
        out
    }

    fn localize(&self, m: &Sym3) -> [[f64; 3]; 3] {
        let (p, s) = self.local_map();
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = s[i] * s[j] * m.get(p[i], p[j]);
            }
        }
        out
    }

    fn line_len(&self, g: &Grid2D) -> f64 {
        if self.axis == 0 {
            g.lx
        } else {
            g.ly
        }
    }

    fn perp_len(&self, g: &Grid2D) -> f64 {
        if self.axis == 0 {
            g.ly
        } else {
            g.lx
        }
    }

    fn perp_count(&self, g: &Grid2D) -> usize {
        if self.axis == 0 {
            g.ny
        } else {
            g.nx
        }
    }
}

/// Per-line Fourier coefficients of a grid field along the foliation axis.
struct LineSpectra {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl LineSpectra {
    fn new(f: &ScalarField2D, axis: usize) -> Self {
        let g = *f.grid();
        let (n, lines) = if axis == 0 { (g.nx, g.ny) } else { (g.ny, g.nx) };
        let (fwd, _) = plan_1d(n);
        let mut coeffs = Vec::with_capacity(n * lines);
        for line in 0..lines {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|k| {
                    let (i, j) = if axis == 0 { (k, line) } else { (line, k) };
                    Complex64::new(f.at(i, j), 0.0)
                })
                .collect();
            fwd.process(&mut buf);
            coeffs.extend(buf.into_iter().map(|c| c / n as f64));
        }
        Self { n, coeffs }
    }

    fn eval(&self, line: usize, basis: &[Complex64]) -> f64 {
        let c = &self.coeffs[line * self.n..(line + 1) * self.n];
        c.iter().zip(basis).map(|(a, b)| (a * b).re).sum()
    }
}

/// Fourier basis `e^{i k_m x}` for interpolation at `x` on a period `len`.
fn basis(n: usize, len: f64, x: f64) -> Vec<Complex64> {
    (0..n)
        .map(|m| {
            let k = 2.0 * PI / len * Grid2D::mode(m, n) as f64;
            Complex64::from_polar(1.0, k * x)
        })
        .collect()
}

/// Spectral derivative of a periodic sample array on a period `len`.
fn derivative_1d(values: &[f64], len: f64) -> Vec<f64> {
    let n = values.len();
    let (fwd, inv) = plan_1d(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (m, c) in buf.iter_mut().enumerate() {
        let k = if m == n / 2 { 0.0 } else { 2.0 * PI / len * Grid2D::mode(m, n) as f64 };
        *c *= Complex64::new(0.0, k) / n as f64;
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// `1D` spectral Sobolev norm `(len Σ (1+k²)^s |f̂_k|²)^{1/2}`.
fn sobolev_1d(values: &[f64], len: f64, s: f64) -> f64 {
    let n = values.len();
    let (fwd, _) = plan_1d(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let mut acc = 0.0;
    for (m, c) in buf.iter().enumerate() {
        let k = 2.0 * PI / len * Grid2D::mode(m, n) as f64;
        acc += (1.0 + k * k).powf(s) * (c / n as f64).norm_sqr();
    }
    (len * acc).sqrt()
}

/// Fourth-order time derivative of every sample of a uniform series, one-sided near the ends.
fn series_derivative(series: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>> {
    const START: [[f64; 5]; 2] = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
    let n = series.len();
    if n < 5 {
        return Err(Error::TooFewSlices { need: 5, have: n });
    }
    let len = series[0].len();
    Ok((0..n)
        .map(|k| {
            let (base, coef, sign): (usize, [f64; 5], f64) = match k {
                0 | 1 => (0, START[k], 1.0),
                _ if k + 2 >= n => (n - 5, START[n - 1 - k], -1.0),
                _ => (k - 2, D1, 1.0),
            };
            (0..len)
                .map(|i| {
                    let acc: f64 = if sign > 0.0 {
                        (0..5).map(|o| coef[o] * series[base + o][i]).sum()
                    } else {
                        (0..5).map(|o| coef[o] * series[base + 4 - o][i]).sum()
                    };
                    sign * acc / (12.0 * h)
                })
                .collect()
        })
        .collect())
}

fn stencil_derivative(series: &[&[f64]], h: f64) -> Vec<f64> {
    let n = series[0].len();
    (0..n)
        .map(|i| D1.iter().zip(series).map(|(c, s)| c * s[i]).sum::<f64>() / (12.0 * h))
        .collect()
}

/// One time sample of a foliation.
#[derive(Debug, Clone, Serialize)]
pub struct FoliationSample {
    pub slice: usize,
    pub time: f64,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub phi_1: Vec<f64>,
}

/// Graph `y2 = φ(t, y1)` of a null hypersurface, sampled every other trajectory slice.
#[derive(Debug, Clone, Serialize)]
pub struct NullFoliation {
    pub direction: Direction,
    pub r: f64,
    pub transverse: Vec<f64>,
    pub samples: Vec<FoliationSample>,
    /// Largest `|g^{αβ}ξ_αξ_β|` of the graph conormal over all samples.
    pub null_defect: f64,
}

impl NullFoliation {
    /// Time step between samples.
    pub fn sample_dt(&self) -> f64 {
        if self.samples.len() < 2 {
            0.0
        } else {
            self.samples[1].time - self.samples[0].time
        }
    }
}

fn metric_series(traj: &Trajectory, eos: &EquationOfState) -> Result<Vec<(Vec<Sym3>, Vec<Sym3>)>> {
    traj.states
        .iter()
        .map(|s| acoustic_metric(s, eos).map(|m| (m.ginv, m.gcov)))
        .collect()
}

fn component_field(grid: &Grid2D, m: &[Sym3], c: usize) -> ScalarField2D {
    ScalarField2D::from_vec_unchecked(*grid, m.iter().map(|s| s.0[c]).collect())
}

fn line_spectra_sym(grid: &Grid2D, m: &[Sym3], axis: usize) -> [LineSpectra; 6] {
    std::array::from_fn(|c| LineSpectra::new(&component_field(grid, m, c), axis))
}

fn eval_sym(spec: &[LineSpectra; 6], line: usize, b: &[Complex64]) -> Sym3 {
    Sym3(std::array::from_fn(|c| spec[c].eval(line, b)))
}

/// Root of `φ_t² + 2Bφ_t − C = 0` continuous with the outgoing Minkowski branch.
fn phi_t_root(gl: &[[f64; 3]; 3], phi1: f64) -> (f64, f64) {
    let b = gl[0][2] - gl[0][1] * phi1;
    let c = gl[1][1] * phi1 * phi1 - 2.0 * gl[1][2] * phi1 + gl[2][2];
    let disc = b * b + c;
    (-b + disc.max(0.0).sqrt(), disc)
}

fn conormal(phi_t: f64, phi1: f64) -> [f64; 3] {
    [-phi_t, -phi1, 1.0]
}

fn quad(m: &[[f64; 3]; 3], x: &[f64; 3], y: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += m[i][j] * x[i] * y[j];
        }
    }
    s
}

fn mat_vec(m: &[[f64; 3]; 3], x: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|j| m[i][j] * x[j]).sum())
}

struct FoliationStepper<'a> {
    dir: Direction,
    grid: Grid2D,
    ginv: &'a [(Vec<Sym3>, Vec<Sym3>)],
    cache: Vec<Option<[LineSpectra; 6]>>,
}

impl<'a> FoliationStepper<'a> {
    fn spectra(&mut self, n: usize) -> &[LineSpectra; 6] {
        if self.cache[n].is_none() {
            self.cache[n] = Some(line_spectra_sym(&self.grid, &self.ginv[n].0, self.dir.axis));
        }
        self.cache[n].as_ref().expect("cached")
    }

    /// `(φ_t, φ_1)` on slice `n` and the smallest discriminant with its location.
    fn rate(&mut self, n: usize, time: f64, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let dir = self.dir;
        let g = self.grid;
        let len = dir.line_len(&g);
        let plen = dir.perp_len(&g);
        let phi1: Vec<f64> = derivative_1d(phi, plen).into_iter().map(|d| d * dir.perp_sign()).collect();
        let nline = if dir.axis == 0 { g.nx } else { g.ny };
        let spec = self.spectra(n);
        let mut rate = Vec::with_capacity(phi.len());
        let mut defect: f64 = 0.0;
        for (i, (&p, &p1)) in phi.iter().zip(&phi1).enumerate() {
            let b = basis(nline, len, dir.sign * p);
            let gl = dir.localize(&eval_sym(spec, i, &b));
            let (pt, disc) = phi_t_root(&gl, p1);
            if !(disc >= 0.0) {
                return Err(Error::Causality { time, index: i, disc });
            }
            let xi = conormal(pt, p1);
            defect = defect.max(quad(&gl, &xi, &xi).abs());
            rate.push(pt);
        }
        Ok((rate, phi1, defect))
    }
}

/// Evolves the foliation `{θ·x − φ = 0}`, `φ(t₀) = r`, from slice `start` to the end of the trajectory.
pub fn evolve_foliation(
    traj: &Trajectory,
    eos: &EquationOfState,
    direction: Direction,
    r: f64,
    start: usize,
) -> Result<NullFoliation> {
    if start + 2 >= traj.len() {
        return Err(Error::TooFewSlices {
            need: start + 3,
            have: traj.len(),
        });
    }
    let grid = *traj.grid();
    let metrics = metric_series(traj, eos)?;
    let np = direction.perp_count(&grid);
    let plen = direction.perp_len(&grid);
    let transverse: Vec<f64> = (0..np).map(|i| direction.perp_sign() * i as f64 * plen / np as f64).collect();
    let mut stepper = FoliationStepper {
        dir: direction,
        grid,
        ginv: &metrics,
        cache: (0..traj.len()).map(|_| None).collect(),
    };
    let dt = traj.dt;
    let mut phi = vec![r; np];
    let mut samples = Vec::new();
    let mut null_defect: f64 = 0.0;
    let mut n = start;
    loop {
        let t = traj.time(n);
        let (k1, phi1, defect) = stepper.rate(n, t, &phi)?;
        null_defect = null_defect.max(defect);
        samples.push(FoliationSample {
            slice: n,
            time: t,
            phi: phi.clone(),
            phi_t: k1.clone(),
            phi_1: phi1,
        });
        if n + 2 >= traj.len() {
            break;
        }
        let shifted = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> { base.iter().zip(k).map(|(a, b)| a + h * b).collect() };
        let (k2, _, _) = stepper.rate(n + 1, t + dt, &shifted(&phi, &k1, dt))?;
        let (k3, _, _) = stepper.rate(n + 1, t + dt, &shifted(&phi, &k2, dt))?;
        let (k4, _, _) = stepper.rate(n + 2, t + 2.0 * dt, &shifted(&phi, &k3, 2.0 * dt))?;
        for i in 0..np {
            phi[i] += 2.0 * dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        stepper.cache[n] = None;
        stepper.cache[n + 1] = None;
        n += 2;
    }
    Ok(NullFoliation {
        direction,
        r,
        transverse,
        samples,
        null_defect,
    })
}

/// Checks that foliations of one direction with increasing `r` never cross.
pub fn check_ordering(foliations: &[NullFoliation]) -> Result<()> {
    let mut sorted: Vec<&NullFoliation> = foliations.iter().collect();
    sorted.sort_by(|a, b| a.r.total_cmp(&b.r));
    for pair in sorted.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo.direction != hi.direction || lo.r == hi.r {
            continue;
        }
        for (a, b) in lo.samples.iter().zip(&hi.samples) {
            if let Some(i) = (0..a.phi.len()).find(|&i| a.phi[i] >= b.phi[i]) {
                return Err(Error::Degenerate {
                    time: a.time,
                    detail: format!("leaves r = {} and r = {} cross at transverse index {i}", lo.r, hi.r),
                });
            }
        }
    }
    Ok(())
}

/// Null frame `(l, l̄, e1)` on one foliation sample, in local coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct FrameSample {
    pub slice: usize,
    pub time: f64,
    pub l: Vec<[f64; 3]>,
    pub lbar: Vec<[f64; 3]>,
    pub e1: Vec<[f64; 3]>,
    pub sigma: Vec<f64>,
    /// Largest entrywise deviation of the Gram matrix from `[[0,2,0],[2,0,0],[0,0,1]]`.
    pub gram_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullFrame {
    pub direction: Direction,
    pub samples: Vec<FrameSample>,
}

impl NullFrame {
    pub fn gram_defect(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.gram_defect))
    }

    /// Largest `|e1 − ∂_1| + |l − (∂_t + ∂_2)|` over all samples.
    pub fn flat_deviation(&self) -> f64 {
        let norm = |a: &[f64; 3], b: [f64; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            for (l, e) in s.l.iter().zip(&s.e1) {
                worst = worst.max(norm(e, [0.0, 1.0, 0.0]) + norm(l, [1.0, 0.0, 1.0]));
            }
        }
        worst
    }
}

fn frame_point(ginv: &[[f64; 3]; 3], gcov: &[[f64; 3]; 3], phi_t: f64, phi1: f64, time: f64) -> Result<([f64; 3], [f64; 3], [f64; 3], f64, f64)> {
    let xi = conormal(phi_t, phi1);
    let v = mat_vec(ginv, &xi);
    let sigma = v[0];
    if !(sigma > 0.0) {
        return Err(Error::Degenerate {
            time,
            detail: format!("σ = dt(V) = {sigma} is not positive"),
        });
    }
    let mut l = v.map(|x| x / sigma);
    l[0] = 1.0;
    let n = [-ginv[0][0], -ginv[1][0], -ginv[2][0]];
    let lbar: [f64; 3] = std::array::from_fn(|i| l[i] - 2.0 * n[i]);
    let x = [0.0, 1.0, phi1];
    let xn = quad(gcov, &x, &x);
    if !(xn > 0.0) {
        return Err(Error::Degenerate {
            time,
            detail: format!("transverse tangent has g-length² {xn}"),
        });
    }
    let e1 = x.map(|c| c / xn.sqrt());
    let vecs = [l, lbar, e1];
    let target = [[0.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
    let mut defect: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            defect = defect.max((quad(gcov, &vecs[a], &vecs[b]) - target[a][b]).abs());
        }
    }
    Ok((l, lbar, e1, sigma, defect))
}

/// Builds `l = σ⁻¹(dr)^♯`, `l̄ = l − 2n` with `n^α = −g^{α0}`, and `e1 = X/|X|_g`,
/// `X = ∂_1 + ∂_1φ ∂_2`, at every foliation sample.
pub fn build_null_frame(traj: &Trajectory, eos: &EquationOfState, fol: &NullFoliation) -> Result<NullFrame> {
    let grid = *traj.grid();
    let dir = fol.direction;
    let len = dir.line_len(&grid);
    let nline = if dir.axis == 0 { grid.nx } else { grid.ny };
    let mut samples = Vec::with_capacity(fol.samples.len());
    for s in &fol.samples {
        let m = acoustic_metric(&traj.states[s.slice], eos)?;
        let si = line_spectra_sym(&grid, &m.ginv, dir.axis);
        let mut fs = FrameSample {
            slice: s.slice,
            time: s.time,
            l: Vec::new(),
            lbar: Vec::new(),
            e1: Vec::new(),
            sigma: Vec::new(),
            gram_defect: 0.0,
        };
        for i in 0..s.phi.len() {
            let b = basis(nline, len, dir.sign * s.phi[i]);
            let gi = dir.localize(&eval_sym(&si, i, &b));
            let gc = dir_inverse(&gi).ok_or_else(|| Error::Singular {
                what: "interpolated acoustic metric".into(),
                index: i,
            })?;
            let (l, lbar, e1, sigma, defect) = frame_point(&gi, &gc, s.phi_t[i], s.phi_1[i], s.time)?;
            fs.l.push(l);
            fs.lbar.push(lbar);
            fs.e1.push(e1);
            fs.sigma.push(sigma);
            fs.gram_defect = fs.gram_defect.max(defect);
        }
        samples.push(fs);
    }
    Ok(NullFrame { direction: dir, samples })
}

/// Metric, first and second derivatives of `g_{αβ}` at a point, in local coordinates.
struct PointMetric {
    g: [[f64; 3]; 3],
    ginv: [[f64; 3]; 3],
    dg: [[[f64; 3]; 3]; 3],
    ddg: [[[[f64; 3]; 3]; 3]; 3],
}

impl PointMetric {
    /// `Γ^a_{bc}` and `∂_d Γ^a_{bc}` (index order `[d][a][b][c]`).
    fn christoffel(&self) -> ([[[f64; 3]; 3]; 3], [[[[f64; 3]; 3]; 3]; 3]) {
        let gi = &self.ginv;
        let mut lower = [[[0.0; 3]; 3]; 3];
        let mut dlower = [[[[0.0; 3]; 3]; 3]; 3];
        for e in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    lower[e][b][c] = 0.5 * (self.dg[b][e][c] + self.dg[c][e][b] - self.dg[e][b][c]);
                    for d in 0..3 {
                        dlower[d][e][b][c] =
                            0.5 * (self.ddg[d][b][e][c] + self.ddg[d][c][e][b] - self.ddg[d][e][b][c]);
                    }
                }
            }
        }
        let mut dginv = [[[0.0; 3]; 3]; 3];
        for d in 0..3 {
            for a in 0..3 {
                for e in 0..3 {
                    let mut s = 0.0;
                    for f in 0..3 {
                        for h in 0..3 {
                            s -= gi[a][f] * self.dg[d][f][h] * gi[h][e];
                        }
                    }
                    dginv[d][a][e] = s;
                }
            }
        }
        let mut gamma = [[[0.0; 3]; 3]; 3];
        let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    gamma[a][b][c] = (0..3).map(|e| gi[a][e] * lower[e][b][c]).sum();
                    for d in 0..3 {
                        dgamma[d][a][b][c] = (0..3)
                            .map(|e| dginv[d][a][e] * lower[e][b][c] + gi[a][e] * dlower[d][e][b][c])
                            .sum();
                    }
                }
            }
        }
        (gamma, dgamma)
    }

    /// `R_{bd}` with `R_{bd} = ∂_aΓ^a_{bd} − ∂_dΓ^a_{ba} + Γ^a_{ae}Γ^e_{bd} − Γ^a_{de}Γ^e_{ba}`.
    fn ricci(gamma: &[[[f64; 3]; 3]; 3], dgamma: &[[[[f64; 3]; 3]; 3]; 3]) -> [[f64; 3]; 3] {
        let mut r = [[0.0; 3]; 3];
        for b in 0..3 {
            for d in 0..3 {
                let mut s = 0.0;
                for a in 0..3 {
                    s += dgamma[a][a][b][d] - dgamma[d][a][b][a];
                    for e in 0..3 {
                        s += gamma[a][a][e] * gamma[e][b][d] - gamma[a][d][e] * gamma[e][b][a];
                    }
                }
                r[b][d] = s;
            }
        }
        r
    }
}

/// Interpolates `g_{αβ}` and its first and second space-time derivatives along a foliation sample.
struct MetricJetLines {
    dir: Direction,
    nline: usize,
    len: f64,
    comps: Vec<[LineSpectra; 10]>,
}

/// Jet slot order: value, ∂t, ∂1, ∂2, ∂tt, ∂t1, ∂t2, ∂11, ∂12, ∂22 (global indices).
const JET_SLOTS: [&[usize]; 10] = [&[], &[0], &[1], &[2], &[0, 0], &[0, 1], &[0, 2], &[1, 1], &[1, 2], &[2, 2]];

impl MetricJetLines {
    fn new(grid: &Grid2D, metrics: &[(Vec<Sym3>, Vec<Sym3>)], n: usize, dt: f64, dir: Direction) -> Self {
        let comps = (0..6)
            .map(|c| {
                let get = |m: usize| component_field(grid, &metrics[m].1, c);
                let jet = Jet::build(&get, n, dt, 2);
                std::array::from_fn(|s| LineSpectra::new(jet.d(JET_SLOTS[s]), dir.axis))
            })
            .collect();
        Self {
            dir,
            nline: if dir.axis == 0 { grid.nx } else { grid.ny },
            len: dir.line_len(grid),
            comps,
        }
    }

    fn point(&self, line: usize, y2: f64) -> Option<PointMetric> {
        let b = basis(self.nline, self.len, self.dir.sign * y2);
        let slot = |s: usize| Sym3(std::array::from_fn(|c| self.comps[c][s].eval(line, &b)));
        let (p, sg) = self.dir.local_map();
        let g = self.dir.localize(&slot(0));
        let ginv = dir_inverse(&g)?;
        let first = [slot(1), slot(2), slot(3)];
        let second: Vec<Sym3> = (4..10).map(slot).collect();
        let pair = |a: usize, b: usize| -> usize {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            match (a, b) {
                (0, 0) => 0,
                (0, 1) => 1,
                (0, 2) => 2,
                (1, 1) => 3,
                (1, 2) => 4,
                _ => 5,
            }
        };
        let mut dg = [[[0.0; 3]; 3]; 3];
        let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
        for k in 0..3 {
            let gk = self.dir.localize(&first[p[k]]);
            for i in 0..3 {
                for j in 0..3 {
                    dg[k][i][j] = sg[k] * gk[i][j];
                }
            }
            for l in 0..3 {
                let gkl = self.dir.localize(&second[pair(p[k], p[l])]);
                for i in 0..3 {
                    for j in 0..3 {
                        ddg[k][l][i][j] = sg[k] * sg[l] * gkl[i][j];
                    }
                }
            }
        }
        Some(PointMetric { g, ginv, dg, ddg })
    }
}

fn dir_inverse(g: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let s = Sym3([g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]]);
    s.inverse().map(|m| m.to_array())
}

type Christoffel = ([[[f64; 3]; 3]; 3], [[f64; 3]; 3]);

/// `χ` and `Ric(l,l)` at one frame sample.
#[derive(Debug, Clone, Serialize)]
pub struct ChiSample {
    pub slice: usize,
    pub time: f64,
    pub chi: Vec<f64>,
    pub ric_ll: Vec<f64>,
}

/// Transport audit of `χ` at one sample.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub slice: usize,
    pub time: f64,
    pub chi_sup: f64,
    /// `sup |l(ln σ)|`.
    pub log_sigma_derivative_sup: f64,
    /// `sup |κ|` with `D_l l = κ l`.
    pub kappa_sup: f64,
    /// `sup |l(χ) + χ² − κχ + Ric(l,l)|`.
    pub residual_sup: f64,
    /// `sup |l(χ) + χ² + l(ln σ)χ + Ric(l,l)|`.
    pub residual_sigma_sup: f64,
    /// Largest single term, for relative comparison.
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionReport {
    pub chi: Vec<ChiSample>,
    pub audit: Vec<AuditRow>,
}

impl ConnectionReport {
    pub fn chi_sup(&self) -> f64 {
        self.chi.iter().flat_map(|s| s.chi.iter()).fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn audit_residual_sup(&self) -> f64 {
        self.audit.iter().fold(0.0, |m, r| m.max(r.residual_sup))
    }
}

/// `χ = ⟨D_{e1} l, e1⟩` on interior samples and the transport audit where enough neighbours exist.
pub fn connection_chi(
    traj: &Trajectory,
    eos: &EquationOfState,
    fol: &NullFoliation,
    frame: &NullFrame,
) -> Result<ConnectionReport> {
    let grid = *traj.grid();
    let dir = fol.direction;
    let plen = dir.perp_len(&grid);
    let metrics = metric_series(traj, eos)?;
    let mut chi = Vec::new();
    let mut gammas: Vec<Option<Vec<Christoffel>>> = Vec::new();
    for (s, fs) in fol.samples.iter().zip(&frame.samples) {
        if s.slice < 2 || s.slice + 2 >= traj.len() {
            gammas.push(None);
            continue;
        }
        let lines = MetricJetLines::new(&grid, &metrics, s.slice, traj.dt, dir);
        let np = s.phi.len();
        let dl: [Vec<f64>; 3] = std::array::from_fn(|a| {
            let comp: Vec<f64> = fs.l.iter().map(|l| l[a]).collect();
            derivative_1d(&comp, plen).into_iter().map(|d| d * dir.perp_sign()).collect()
        });
        let mut cs = Vec::with_capacity(np);
        let mut rl = Vec::with_capacity(np);
        let mut gs = Vec::with_capacity(np);
        for i in 0..np {
            let pm = lines.point(i, s.phi[i]).ok_or_else(|| Error::Singular {
                what: "interpolated acoustic metric".into(),
                index: i,
            })?;
            let (gamma, dgamma) = pm.christoffel();
            let ric = PointMetric::ricci(&gamma, &dgamma);
            let (l, e1) = (fs.l[i], fs.e1[i]);
            let d_e1_l: [f64; 3] = std::array::from_fn(|a| {
                let mut v = e1[1] * dl[a][i];
                for b in 0..3 {
                    for c in 0..3 {
                        v += gamma[a][b][c] * e1[b] * l[c];
                    }
                }
                v
            });
            cs.push(quad(&pm.g, &d_e1_l, &e1));
            rl.push(quad(&ric, &l, &l));
            gs.push((gamma, pm.g));
        }
        chi.push(ChiSample {
            slice: s.slice,
            time: s.time,
            chi: cs,
            ric_ll: rl,
        });
        gammas.push(Some(gs));
    }
    let first = gammas.iter().position(Option::is_some).unwrap_or(0);
    let h = fol.sample_dt();
    let mut audit = Vec::new();
    for c in 2..chi.len().saturating_sub(2) {
        let k = first + c;
        let s = &fol.samples[k];
        let fs = &frame.samples[k];
        let gamma = gammas[k].as_ref().expect("interior sample");
        let np = s.phi.len();
        let chis: Vec<&[f64]> = (c - 2..=c + 2).map(|j| chi[j].chi.as_slice()).collect();
        let chi_t = stencil_derivative(&chis, h);
        let chi_1: Vec<f64> = derivative_1d(&chi[c].chi, plen).into_iter().map(|d| d * dir.perp_sign()).collect();
        let lnsig: Vec<Vec<f64>> = (k - 2..=k + 2).map(|j| frame.samples[j].sigma.iter().map(|x| x.ln()).collect()).collect();
        let lnsig_refs: Vec<&[f64]> = lnsig.iter().map(|v| v.as_slice()).collect();
        let lnsig_t = stencil_derivative(&lnsig_refs, h);
        let lnsig_1: Vec<f64> = derivative_1d(&lnsig[2], plen).into_iter().map(|d| d * dir.perp_sign()).collect();
        let lcomp: [Vec<Vec<f64>>; 3] = std::array::from_fn(|a| {
            (k - 2..=k + 2).map(|j| frame.samples[j].l.iter().map(|l| l[a]).collect()).collect()
        });
        let mut row = AuditRow {
            slice: s.slice,
            time: s.time,
            chi_sup: 0.0,
            log_sigma_derivative_sup: 0.0,
            kappa_sup: 0.0,
            residual_sup: 0.0,
            residual_sigma_sup: 0.0,
            scale: 0.0,
        };
        let dl: [(Vec<f64>, Vec<f64>); 3] = std::array::from_fn(|a| {
            let refs: Vec<&[f64]> = lcomp[a].iter().map(|v| v.as_slice()).collect();
            let t = stencil_derivative(&refs, h);
            let x: Vec<f64> = derivative_1d(&lcomp[a][2], plen).into_iter().map(|d| d * dir.perp_sign()).collect();
            (t, x)
        });
        for i in 0..np {
            let l = fs.l[i];
            let along = |ft: f64, f1: f64| l[0] * ft + l[1] * f1;
            let l_chi = along(chi_t[i], chi_1[i]);
            let k_sigma = along(lnsig_t[i], lnsig_1[i]);
            let d_l_l: [f64; 3] = std::array::from_fn(|a| {
                let mut v = along(dl[a].0[i], dl[a].1[i]);
                for b in 0..3 {
                    for c2 in 0..3 {
                        v += gamma[i].0[a][b][c2] * l[b] * l[c2];
                    }
                }
                v
            });
            let kappa = 0.5 * quad(&gamma[i].1, &d_l_l, &fs.lbar[i]);
            let x = chi[c].chi[i];
            let ric = chi[c].ric_ll[i];
            let res = l_chi + x * x - kappa * x + ric;
            let res_sigma = l_chi + x * x + k_sigma * x + ric;
            row.chi_sup = row.chi_sup.max(x.abs());
            row.log_sigma_derivative_sup = row.log_sigma_derivative_sup.max(k_sigma.abs());
            row.kappa_sup = row.kappa_sup.max(kappa.abs());
            row.residual_sup = row.residual_sup.max(res.abs());
            row.residual_sigma_sup = row.residual_sigma_sup.max(res_sigma.abs());
            row.scale = row.scale.max(l_chi.abs()).max(x * x).max((kappa * x).abs()).max(ric.abs());
        }
        audit.push(row);
    }
    Ok(ConnectionReport { chi, audit })
}

/// Background plane speed used as the reference in [`foliation_norms`].
pub fn reference_speed(state: &FluidState, eos: &EquationOfState) -> f64 {
    eos.cs(state.h.mean())
}

/// `‖dφ − (c_ref, 0)‖` in the slab norm `(sup_{j∈{0,1}} ∫ ‖∂_t^j f‖²_{H^{a−j}} dt)^{1/2}`, `a = s₀ − 1/4`.
#[derive(Debug, Clone, Serialize)]
pub struct FoliationNorms {
    pub s0: f64,
    pub value: f64,
}

pub fn foliation_norms(fol: &NullFoliation, grid: &Grid2D, c_ref: f64, s0: f64) -> Result<FoliationNorms> {
    if fol.samples.len() < 5 {
        return Err(Error::TooFewSlices {
            need: 5,
            have: fol.samples.len(),
        });
    }
    let plen = fol.direction.perp_len(grid);
    let a = s0 - 0.25;
    let h = fol.sample_dt();
    let comps: [Vec<Vec<f64>>; 2] = [
        fol.samples.iter().map(|s| s.phi_t.iter().map(|v| v - c_ref).collect()).collect(),
        fol.samples.iter().map(|s| s.phi_1.clone()).collect(),
    ];
    let rates = [series_derivative(&comps[0], h)?, series_derivative(&comps[1], h)?];
    let mut j0 = Vec::new();
    let mut j1 = Vec::new();
    for k in 0..fol.samples.len() {
        j0.push(comps.iter().map(|c| sobolev_1d(&c[k], plen, a).powi(2)).sum::<f64>());
        j1.push(rates.iter().map(|c| sobolev_1d(&c[k], plen, a - 1.0).powi(2)).sum::<f64>());
    }
    let i0 = crate::field::simpson(&j0, h);
    let i1 = crate::field::simpson(&j1, h);
    Ok(FoliationNorms {
        s0,
        value: i0.max(i1).sqrt(),
    })
}

/// One row of the foliation export.
#[derive(Debug, Clone, Serialize)]
pub struct FoliationSummaryRow {
    pub time: f64,
    pub min_phi_t_minus_1: f64,
    pub max_phi_t_minus_1: f64,
    pub mean_phi_t_minus_1: f64,
    pub chi_sup: Option<f64>,
}

pub fn foliation_summary(fol: &NullFoliation, chi: Option<&ConnectionReport>) -> Vec<FoliationSummaryRow> {
    fol.samples
        .iter()
        .map(|s| {
            let d: Vec<f64> = s.phi_t.iter().map(|v| v - 1.0).collect();
            let chi_sup = chi.and_then(|c| c.chi.iter().find(|x| x.slice == s.slice)).map(|x| x.chi.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            FoliationSummaryRow {
                time: s.time,
                min_phi_t_minus_1: d.iter().cloned().fold(f64::INFINITY, f64::min),
                max_phi_t_minus_1: d.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean_phi_t_minus_1: d.iter().sum::<f64>() / d.len() as f64,
                chi_sup,
            }
        })
        .collect()
}
