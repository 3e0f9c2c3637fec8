//! Quadratic sources `D`, `Q` and residual oracles for the wave-transport form of the equations.

use crate::elliptic::{curl_w_point, VMinus};
use crate::error::{Error, Result};
use crate::field::ScalarField2D;
use crate::hyperbolic::Trajectory;
use crate::jet::{PointJet, StateJets, StatePoint};
use crate::thermo::{metric_point, normalized_velocity, EquationOfState, Sym3, MINKOWSKI_DIAG as M};
use crate::vorticity::{l2_norm3, VortexPoint};
use serde::Serialize;

/// `(D, Q⁰, Q¹, Q²)` at one point.
pub fn sources_point(p: &StatePoint, eos: &EquationOfState) -> Result<(f64, [f64; 3])> {
    let h = p.h.val;
    let cs2 = eos.cs2(h);
    let ccp = eos.cs_dcs(h);
    let u = normalized_velocity(h, p.v[1].val, p.v[2].val);
    let (_, theta) = metric_point(cs2, &u)?;
    let e2 = (-2.0 * h).exp();
    let dh = p.h.d1;
    let vdh: f64 = (0..3).map(|k| p.v[k].val * dh[k]).sum();
    let dhdh: f64 = (0..3).map(|k| M[k] * dh[k] * dh[k]).sum();
    let mut cross = 0.0;
    for k in 0..3 {
        for b in 0..3 {
            cross += p.v[b].d1[k] * p.v[k].d1[b];
        }
    }
    let div_v: f64 = (0..3).map(|k| p.v[k].d1[k]).sum();
    let d = -2.0 * e2 * theta * (ccp / cs2) * vdh * vdh
        - e2 * theta * cs2 * cross
        - theta * (1.0 + cs2) * dhdh;
    let mut q = [0.0; 3];
    for (a, qa) in q.iter_mut().enumerate() {
        let up_dh = M[a] * dh[a];
        let mut conv = 0.0;
        for b in 0..3 {
            for k in 0..3 {
                conv += p.v[b].val * p.v[k].d1[b] * p.v[a].d1[k];
            }
        }
        let dv_dh: f64 = (0..3).map(|b| M[a] * p.v[b].d1[a] * dh[b]).sum();
        *qa = -e2 * (cs2 - 1.0) * theta * conv - 2.0 * (cs2 - 1.0) * theta * vdh * up_dh
            - 2.0 * theta * ccp * up_dh * div_v
            + (cs2 - 1.0) * theta * dv_dh
            + 2.0 * theta * ccp * vdh * up_dh;
    }
    Ok((d, q))
}

/// Quadratic source fields at one slice.
#[derive(Debug, Clone)]
pub struct QuadraticSources {
    pub d: ScalarField2D,
    pub q: [ScalarField2D; 3],
}

pub fn quadratic_sources_at(jets: &StateJets, eos: &EquationOfState) -> Result<QuadraticSources> {
    jets.require_order(1)?;
    let g = *jets.grid();
    let mut d = vec![0.0; g.len()];
    let mut q = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for k in 0..g.len() {
        let (dk, qk) = sources_point(&jets.point(k), eos)?;
        d[k] = dk;
        for a in 0..3 {
            q[a][k] = qk[a];
        }
    }
    Ok(QuadraticSources {
        d: ScalarField2D::new(g, d)?,
        q: q.map(|v| ScalarField2D::from_vec_unchecked(g, v)),
    })
}

/// Sources at slice `n` (first derivatives from a fourth-order time stencil).
pub fn quadratic_sources(traj: &Trajectory, n: usize, eos: &EquationOfState) -> Result<QuadraticSources> {
    quadratic_sources_at(&StateJets::at(traj, n, 1)?, eos)
}

/// `g^{αβ}∂²_{αβ}f` at a point.
#[inline]
pub fn box_point(g: &Sym3, f: &PointJet) -> f64 {
    let mut acc = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            acc += g.get(a, b) * f.d2[a][b];
        }
    }
    acc
}

/// `□_g f` at slice `n`, with `g` supplied per slice.
pub fn box_g(
    traj_f: &dyn Fn(usize) -> ScalarField2D,
    metric: &[Sym3],
    n: usize,
    dt: f64,
    len: usize,
) -> Result<ScalarField2D> {
    if len < 5 {
        return Err(Error::TooFewSlices { need: 5, have: len });
    }
    if n < 2 || n + 2 >= len {
        return Err(Error::BoundarySlice { n, len });
    }
    let jet = crate::jet::Jet::build(traj_f, n, dt, 2);
    let g = *jet.grid();
    let values = (0..g.len()).map(|k| box_point(&metric[k], &jet.point(k))).collect();
    ScalarField2D::new(g, values)
}

/// Residual fields of the wave equations at one slice.
#[derive(Debug, Clone)]
pub struct WaveResiduals {
    pub slice: usize,
    pub time: f64,
    pub res_h: ScalarField2D,
    pub res_v: [ScalarField2D; 3],
    pub res_vplus: Option<VPlusResiduals>,
}

/// Three readings of the improved `v₊` equation.
#[derive(Debug, Clone)]
pub struct VPlusResiduals {
    /// Coefficient `(1 + c_s²)` on `Θe^{-2h}v^βv^γ∂²v₋`.
    pub exact: [ScalarField2D; 3],
    /// Coefficient `(1 − 3c_s²)` on the same term.
    pub printed: [ScalarField2D; 3],
    /// Coefficient `(1 + c_s²)` on `Θe^{-2h}(v⁰)²TTv₋`, `T = ∂_t + (v⁰)^{-1}vⁱ∂_i`.
    pub tt: [ScalarField2D; 3],
}

/// L² norms of the residuals.
#[derive(Debug, Clone, Serialize)]
pub struct WaveResidualNorms {
    pub res_h: f64,
    pub res_v: f64,
    pub res_vplus: Option<f64>,
    pub res_vplus_printed: Option<f64>,
    pub res_vplus_tt: Option<f64>,
}

impl WaveResiduals {
    pub fn norms(&self) -> WaveResidualNorms {
        WaveResidualNorms {
            res_h: self.res_h.l2_norm(),
            res_v: l2_norm3(&self.res_v),
            res_vplus: self.res_vplus.as_ref().map(|r| l2_norm3(&r.exact)),
            res_vplus_printed: self.res_vplus.as_ref().map(|r| l2_norm3(&r.printed)),
            res_vplus_tt: self.res_vplus.as_ref().map(|r| l2_norm3(&r.tt)),
        }
    }
}

/// Wave residuals at slice `n`; the `v₊` residuals need `v₋` on a slab containing `n`.
pub fn wave_residuals(
    traj: &Trajectory,
    n: usize,
    eos: &EquationOfState,
    vminus: Option<&VMinus>,
) -> Result<WaveResiduals> {
    let jets = StateJets::at(traj, n, 2)?;
    let vm_jets = match vminus {
        Some(vm) if vm.contains(n) => Some([vm.jet(0, n), vm.jet(1, n), vm.jet(2, n)]),
        Some(_) => {
            return Err(Error::OutOfRange {
                what: "slice".into(),
                detail: format!("{n} lies outside the v₋ slab"),
            })
        }
        None => None,
    };
    let g = *jets.grid();
    let len = g.len();
    let mut res_h = vec![0.0; len];
    let mut res_v = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let mut exact = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let mut printed = exact.clone();
    let mut tt = exact.clone();
    for k in 0..len {
        let p = jets.point(k);
        let h = p.h.val;
        let cs2 = eos.cs2(h);
        let u = normalized_velocity(h, p.v[1].val, p.v[2].val);
        let (gm, theta) = metric_point(cs2, &u)?;
        let (d, q) = sources_point(&p, eos)?;
        res_h[k] = box_point(&gm, &p.h) - d;
        let curl = curl_w_point(&VortexPoint::from_point(&p, 2));
        let mut box_v = [0.0; 3];
        for a in 0..3 {
            box_v[a] = box_point(&gm, &p.v[a]);
            res_v[a][k] = box_v[a] + cs2 * theta * curl[a] - q[a];
        }
        if let Some(vj) = vm_jets.as_ref() {
            let e2 = (-2.0 * h).exp();
            let v0 = p.v[0].val;
            let ratio = |i: usize| p.v[i].val / v0;
            let dratio = |i: usize, m: usize| (p.v[i].d1[m] - ratio(i) * p.v[0].d1[m]) / v0;
            let t_ratio = |i: usize| dratio(i, 0) + (1..3).map(|j| ratio(j) * dratio(i, j)).sum::<f64>();
            for a in 0..3 {
                let vm = vj[a].point(k);
                let box_vplus = box_v[a] - box_point(&gm, &vm);
                let mut vv = 0.0;
                for b in 0..3 {
                    for c in 0..3 {
                        vv += p.v[b].val * p.v[c].val * vm.d2[b][c];
                    }
                }
                let first: f64 = (1..3).map(|i| t_ratio(i) * vm.d1[i]).sum();
                let vtt = vv + v0 * v0 * first;
                let tail = -cs2 * theta * vm.val + q[a];
                exact[a][k] = box_vplus - (theta * e2 * (1.0 + cs2) * vv + tail);
                printed[a][k] = box_vplus - (theta * e2 * (1.0 - 3.0 * cs2) * vv + tail);
                tt[a][k] = box_vplus - (theta * e2 * (1.0 + cs2) * vtt + tail);
            }
        }
    }
    let wrap3 = |v: [Vec<f64>; 3]| -> Result<[ScalarField2D; 3]> {
        let [a, b, c] = v;
        Ok([ScalarField2D::new(g, a)?, ScalarField2D::new(g, b)?, ScalarField2D::new(g, c)?])
    };
    let res_vplus = match vm_jets {
        Some(_) => Some(VPlusResiduals {
            exact: wrap3(exact)?,
            printed: wrap3(printed)?,
            tt: wrap3(tt)?,
        }),
        None => None,
    };
    Ok(WaveResiduals {
        slice: n,
        time: traj.time(n),
        res_h: ScalarField2D::new(g, res_h)?,
        res_v: wrap3(res_v)?,
        res_vplus,
    })
}

/// Stiff three-term form of `D`; `printed_sign` flips the sign of the `w·w` term.
pub fn stiff_d_three_term(p: &StatePoint, vp: &VortexPoint, printed_sign: bool) -> f64 {
    let e2 = (-2.0 * p.h.val).exp();
    let ww: f64 = (0..3).map(|b| M[b] * vp.w[b] * vp.w[b]).sum();
    let dhdh: f64 = (0..3).map(|a| M[a] * p.h.d1[a] * p.h.d1[a]).sum();
    let mut dvdv = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            dvdv += M[a] * M[b] * p.v[b].d1[a] * p.v[b].d1[a];
        }
    }
    let sign = if printed_sign { 1.0 } else { -1.0 };
    sign * e2 * ww - 2.0 * dhdh - e2 * dvdv
}

/// Outcome of the stiff-case checks at one slice.
#[derive(Debug, Clone, Serialize)]
pub struct StiffReport {
    pub slice: usize,
    /// L² norm of `∂_κ v^κ`.
    pub div_v_l2: f64,
    /// Max pointwise difference between the general and the three-term `D`.
    pub d_identity_max: f64,
    /// Same with the opposite sign on the `w·w` term.
    pub d_identity_printed_sign_max: f64,
    pub q_max: f64,
    pub metric_is_minkowski: bool,
    /// L² norm of `□v` (flat wave operator).
    pub box_v_l2: f64,
    /// L² norm of `w`.
    pub w_l2: f64,
}

/// Stiff-case identities at slice `n`; rejects `A ≠ 1`.
pub fn stiff_checks(traj: &Trajectory, n: usize, eos: &EquationOfState) -> Result<StiffReport> {
    if !eos.is_stiff() {
        return Err(Error::OutOfRange {
            what: "A".into(),
            detail: format!("stiff checks need A = 1, got {}", eos.exponent()),
        });
    }
    let jets = StateJets::at(traj, n, 2)?;
    let metric = crate::thermo::acoustic_metric(&traj.states[n], eos)?;
    let metric_is_minkowski = metric
        .ginv
        .iter()
        .chain(metric.gcov.iter())
        .all(|g| *g == Sym3::MINKOWSKI);
    let g = *jets.grid();
    let (mut dmax, mut dpmax, mut qmax) = (0.0f64, 0.0f64, 0.0f64);
    let mut div = vec![0.0; g.len()];
    let mut boxv = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    let mut wsq = vec![0.0; g.len()];
    for k in 0..g.len() {
        let p = jets.point(k);
        let vp = VortexPoint::from_point(&p, 2);
        let (d, q) = sources_point(&p, eos)?;
        dmax = dmax.max((d - stiff_d_three_term(&p, &vp, false)).abs());
        dpmax = dpmax.max((d - stiff_d_three_term(&p, &vp, true)).abs());
        qmax = q.iter().fold(qmax, |m, x| m.max(x.abs()));
        div[k] = (0..3).map(|a| p.v[a].d1[a]).sum();
        for a in 0..3 {
            boxv[a][k] = box_point(&Sym3::MINKOWSKI, &p.v[a]);
        }
        wsq[k] = vp.w.iter().map(|x| x * x).sum();
    }
    let [a, b, c] = boxv;
    Ok(StiffReport {
        slice: n,
        div_v_l2: ScalarField2D::new(g, div)?.l2_norm(),
        d_identity_max: dmax,
        d_identity_printed_sign_max: dpmax,
        q_max: qmax,
        metric_is_minkowski,
        box_v_l2: l2_norm3(&[ScalarField2D::new(g, a)?, ScalarField2D::new(g, b)?, ScalarField2D::new(g, c)?]),
        w_l2: (wsq.iter().sum::<f64>() * g.cell_area()).sqrt(),
    })
}

/// Observed convergence order under a factor-two refinement.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// One row of a residual convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub scenario: String,
    pub nx: usize,
    pub dt: f64,
    pub equation: String,
    pub l2_residual: f64,
    pub observed_order: Option<f64>,
}

/// CSV with 17 significant digits.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("scenario,nx,dt,equation,L2_residual,observed_order\n");
    for r in rows {
        let order = r
            .observed_order
            .map(|o| format!("{o:.16e}"))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{:.16e},{},{:.16e},{}\n",
            r.scenario, r.nx, r.dt, r.equation, r.l2_residual, order
        ));
    }
    s
}
