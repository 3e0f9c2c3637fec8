//! Shared helpers: analytic space-time fields and refinement pairs.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use releuler::field::{Grid2D, ScalarField2D};
use releuler::hyperbolic::{cfl_dt, evolve_steps, EvolveOptions, Silent, Trajectory};
use releuler::jet::{Jet, StateJets, StatePoint};
use releuler::scenario::{initial_state, Preset};
use releuler::thermo::{EquationOfState, FluidState};
use std::f64::consts::PI;

/// `offset + Σ a sin(ω t + k·x + φ)` with integer spatial wavenumbers.
#[derive(Debug, Clone)]
pub struct Waves {
    pub offset: f64,
    pub terms: Vec<(f64, [f64; 3], f64)>,
}

impl Waves {
    pub fn random(seed: u64, offset: f64, amp: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..4)
            .map(|_| {
                let k = [
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-3..=3) as f64,
                    rng.random_range(-3..=3) as f64,
                ];
                (amp * rng.random_range(-1.0..1.0), k, rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        Self { offset, terms }
    }

    /// Derivative along the listed coordinates (0 = t, 1 = x1, 2 = x2).
    pub fn eval(&self, idx: &[usize], t: f64, x: f64, y: f64) -> f64 {
        let base = if idx.is_empty() { self.offset } else { 0.0 };
        base + self
            .terms
            .iter()
            .map(|(a, k, p)| {
                let f: f64 = idx.iter().map(|&i| k[i]).product();
                let th = k[0] * t + k[1] * x + k[2] * y + p + idx.len() as f64 * PI / 2.0;
                a * f * th.sin()
            })
            .sum::<f64>()
    }

    pub fn field(&self, grid: Grid2D, idx: &[usize], t: f64) -> ScalarField2D {
        ScalarField2D::from_fn(grid, |x, y| self.eval(idx, t, x, y))
    }

    /// Jet built from exact time derivatives.
    pub fn jet(&self, grid: Grid2D, t: f64, order: usize) -> Jet {
        let derivs: Vec<ScalarField2D> = (0..=order).map(|k| self.field(grid, &vec![0; k], t)).collect();
        Jet::from_time_derivatives(&derivs, order)
    }
}

/// Space-time fields `h` and `v^α` with exact jets; `v` need not satisfy the constraint.
pub struct AnalyticState {
    pub h: Waves,
    pub v: [Waves; 3],
}

impl AnalyticState {
    pub fn random(seed: u64, h_offset: f64, amp: f64) -> Self {
        Self {
            h: Waves::random(seed, h_offset, amp),
            v: [
                Waves::random(seed + 1, 2.0, amp),
                Waves::random(seed + 2, 0.0, amp),
                Waves::random(seed + 3, 0.0, amp),
            ],
        }
    }

    pub fn jets(&self, grid: Grid2D, t: f64, order: usize) -> StateJets {
        StateJets {
            n: 0,
            time: t,
            h: self.h.jet(grid, t, order),
            v: [
                self.v[0].jet(grid, t, order),
                self.v[1].jet(grid, t, order),
                self.v[2].jet(grid, t, order),
            ],
        }
    }

    /// Exact pointwise jet at `(t, x, y)` up to third order.
    pub fn point(&self, t: f64, x: f64, y: f64) -> StatePoint {
        let pj = |w: &Waves| {
            let mut p = releuler::jet::PointJet {
                val: w.eval(&[], t, x, y),
                ..Default::default()
            };
            for a in 0..3 {
                p.d1[a] = w.eval(&[a], t, x, y);
                for b in 0..3 {
                    p.d2[a][b] = w.eval(&[a, b], t, x, y);
                    for c in 0..3 {
                        p.d3[a][b][c] = w.eval(&[a, b, c], t, x, y);
                    }
                }
            }
            p
        };
        StatePoint {
            h: pj(&self.h),
            v: [pj(&self.v[0]), pj(&self.v[1]), pj(&self.v[2])],
        }
    }
}

/// Coarse (`nx/2`, 16 steps of the CFL step) and fine (`nx`, 32 half steps) runs.
pub fn refinement_pair(preset: Preset, eos: &EquationOfState, nx: usize, amp: f64) -> [Trajectory; 2] {
    let coarse = Grid2D::square(nx / 2).unwrap();
    let dt = cfl_dt(&coarse, 0.4);
    [(nx / 2, dt, 16), (nx, dt / 2.0, 32)].map(|(n, dt, steps)| {
        let g = Grid2D::square(n).unwrap();
        let s = initial_state(preset, &g, eos, amp, 1).unwrap();
        evolve_steps(&s, dt, steps, eos, &EvolveOptions::default(), &mut Silent).unwrap()
    })
}

pub fn constant_trajectory(grid: Grid2D, h: f64, v1: f64, v2: f64, len: usize) -> Trajectory {
    let s = FluidState::constant(grid, h, v1, v2);
    Trajectory::new(0.0, 0.1, vec![s; len]).unwrap()
}

pub fn max3(a: &[ScalarField2D; 3]) -> f64 {
    a.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
}

pub fn diff3(a: &[ScalarField2D; 3], b: &[ScalarField2D; 3]) -> f64 {
    (0..3).map(|c| (&a[c] - &b[c]).max_abs()).fold(0.0, f64::max)
}
