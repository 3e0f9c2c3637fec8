//! Space-time derivative jets at a trajectory slice: spectral in space, fourth-order
//! centered stencils in time (5 points up to ∂_t², 7 points for ∂_t³).

use crate::error::{Error, Result};
use crate::field::{Grid2D, ScalarField2D};
use crate::hyperbolic::{state_time_derivative, Trajectory};
use crate::thermo::{EquationOfState, FluidState};

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D3: [f64; 7] = [1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0];

/// Slices needed on each side of `n` for a jet of the given order.
pub fn half_width(order: usize) -> usize {
    match order {
        0 => 0,
        1 | 2 => 2,
        _ => 3,
    }
}

/// `k`-th time derivative at slice `n` of the series `get(m)`.
pub fn time_derivative(get: &dyn Fn(usize) -> ScalarField2D, n: usize, dt: f64, k: usize) -> ScalarField2D {
    let (coef, scale, half): (&[f64], f64, usize) = match k {
        0 => return get(n),
        1 => (&D1, 12.0 * dt, 2),
        2 => (&D2, 12.0 * dt * dt, 2),
        3 => (&D3, 8.0 * dt * dt * dt, 3),
        _ => panic!("time derivatives above third order are not supported"),
    };
    let mut acc: Option<ScalarField2D> = None;
    for (o, &c) in coef.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let f = get(n + o - half);
        match acc.as_mut() {
            None => acc = Some(&f * (c / scale)),
            Some(a) => a.axpy(c / scale, &f),
        }
    }
    acc.expect("nonempty stencil")
}

/// Index of the sorted multi-index (counts of t, x1, x2 derivatives).
fn slot(counts: [usize; 3]) -> usize {
    let order = counts[0] + counts[1] + counts[2];
    let base = [0, 1, 4, 10][order];
    let mut k = 0;
    for a in (0..=order).rev() {
        for b in (0..=order - a).rev() {
            let c = order - a - b;
            if [a, b, c] == counts {
                return base + k;
            }
            k += 1;
        }
    }
    unreachable!()
}

/// Derivatives of one scalar up to `order` at one slice.
#[derive(Debug, Clone)]
pub struct Jet {
    order: usize,
    comps: Vec<ScalarField2D>,
}

impl Jet {
    /// Builds the jet at slice `n` of the series `get`, which must be defined on
    /// `n - half_width(order) ..= n + half_width(order)`.
    pub fn build(get: &dyn Fn(usize) -> ScalarField2D, n: usize, dt: f64, order: usize) -> Self {
        assert!(order <= 3, "jets above third order are not supported");
        let sample = get(n);
        let grid = *sample.grid();
        let mut comps = vec![ScalarField2D::zeros(grid); [1, 4, 10, 20][order]];
        for kt in 0..=order {
            let base = if kt == 0 { sample.clone() } else { time_derivative(get, n, dt, kt) };
            let spec = base.spectrum();
            for rest in 0..=(order - kt) {
                for a in 0..=rest {
                    let b = rest - a;
                    let f = if rest == 0 {
                        base.clone()
                    } else {
                        spec.derivative(a as u32, b as u32).to_field()
                    };
                    comps[slot([kt, a, b])] = f;
                }
            }
        }
        Self { order, comps }
    }

    /// Jet of a field with no time dependence beyond the supplied time derivatives.
    pub fn from_time_derivatives(derivs: &[ScalarField2D], order: usize) -> Self {
        assert!(derivs.len() > order);
        let grid = *derivs[0].grid();
        let mut comps = vec![ScalarField2D::zeros(grid); [1, 4, 10, 20][order]];
        for kt in 0..=order {
            let spec = derivs[kt].spectrum();
            for rest in 0..=(order - kt) {
                for a in 0..=rest {
                    let b = rest - a;
                    comps[slot([kt, a, b])] = if rest == 0 {
                        derivs[kt].clone()
                    } else {
                        spec.derivative(a as u32, b as u32).to_field()
                    };
                }
            }
        }
        Self { order, comps }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &Grid2D {
        self.comps[0].grid()
    }

    /// Derivative field for the listed coordinate indices (0 = t, 1 = x1, 2 = x2).
    pub fn d(&self, idx: &[usize]) -> &ScalarField2D {
        let mut counts = [0; 3];
        for &i in idx {
            counts[i] += 1;
        }
        assert!(idx.len() <= self.order, "jet order {} too low", self.order);
        &self.comps[slot(counts)]
    }

    pub fn value(&self) -> &ScalarField2D {
        &self.comps[0]
    }

    /// Pointwise gather at flat index `k`.
    pub fn point(&self, k: usize) -> PointJet {
        let mut p = PointJet {
            val: self.comps[0].values()[k],
            ..PointJet::default()
        };
        for a in 0..3 {
            if self.order >= 1 {
                p.d1[a] = self.d(&[a]).values()[k];
            }
            for b in 0..3 {
                if self.order >= 2 {
                    p.d2[a][b] = self.d(&[a, b]).values()[k];
                }
                for c in 0..3 {
                    if self.order >= 3 {
                        p.d3[a][b][c] = self.d(&[a, b, c]).values()[k];
                    }
                }
            }
        }
        p
    }
}

/// Value and derivatives of a scalar at one space-time point.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointJet {
    pub val: f64,
    pub d1: [f64; 3],
    pub d2: [[f64; 3]; 3],
    pub d3: [[[f64; 3]; 3]; 3],
}

/// Jets of `h` and of the contravariant velocity `(v⁰, v¹, v²)` at one slice.
#[derive(Debug, Clone)]
pub struct StateJets {
    pub n: usize,
    pub time: f64,
    pub h: Jet,
    pub v: [Jet; 3],
}

/// Pointwise gather of a [`StateJets`].
#[derive(Debug, Clone, Copy)]
pub struct StatePoint {
    pub h: PointJet,
    pub v: [PointJet; 3],
}

impl StateJets {
    /// Builds all jets at slice `n`, checking the stencil fits inside the trajectory.
    pub fn at(traj: &Trajectory, n: usize, order: usize) -> Result<Self> {
        traj.check_interior(n, half_width(order))?;
        let dt = traj.dt;
        let h = Jet::build(&|m| traj.states[m].h.clone(), n, dt, order);
        let v0 = Jet::build(&|m| traj.states[m].v0(), n, dt, order);
        let v1 = Jet::build(&|m| traj.states[m].v1.clone(), n, dt, order);
        let v2 = Jet::build(&|m| traj.states[m].v2.clone(), n, dt, order);
        Ok(Self {
            n,
            time: traj.time(n),
            h,
            v: [v0, v1, v2],
        })
    }

    /// First-order jets of a single state, with `∂_t` taken from the evolution equations.
    pub fn from_state(state: &FluidState, eos: &EquationOfState, time: f64) -> Result<Self> {
        let [ht, v1t, v2t] = state_time_derivative(state, eos)?;
        let v0 = state.v0();
        let e2h = state.h.map(|h| (2.0 * h).exp());
        let g = *state.grid();
        let v0t: Vec<f64> = (0..g.len())
            .map(|k| {
                let num = e2h.values()[k] * ht.values()[k]
                    + state.v1.values()[k] * v1t.values()[k]
                    + state.v2.values()[k] * v2t.values()[k];
                num / v0.values()[k]
            })
            .collect();
        let v0t = ScalarField2D::new(g, v0t)?;
        Ok(Self {
            n: 0,
            time,
            h: Jet::from_time_derivatives(&[state.h.clone(), ht], 1),
            v: [
                Jet::from_time_derivatives(&[v0, v0t], 1),
                Jet::from_time_derivatives(&[state.v1.clone(), v1t], 1),
                Jet::from_time_derivatives(&[state.v2.clone(), v2t], 1),
            ],
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.h.grid()
    }

    pub fn order(&self) -> usize {
        self.h.order()
    }

    pub fn point(&self, k: usize) -> StatePoint {
        StatePoint {
            h: self.h.point(k),
            v: [self.v[0].point(k), self.v[1].point(k), self.v[2].point(k)],
        }
    }

    pub fn require_order(&self, order: usize) -> Result<()> {
        if self.order() < order {
            return Err(Error::OutOfRange {
                what: "jet order".into(),
                detail: format!("need {order}, have {}", self.order()),
            });
        }
        Ok(())
    }
}
