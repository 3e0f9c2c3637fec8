//! Vorticity `w^α = ε^{αβγ}∂_β v_γ`, modified vorticity `W`, their transport laws and the
//! Hodge-type reconstruction identities.

use crate::error::{Error, Result};
use crate::field::{Grid2D, ScalarField2D};
use crate::hyperbolic::Trajectory;
use crate::jet::{StateJets, StatePoint};
use crate::thermo::{EquationOfState, MINKOWSKI_DIAG as M};
use serde::Serialize;

/// How lower-index ε components are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EpsilonConvention {
    /// `ε_{αβγ}` takes the same values as `ε^{αβγ}`.
    Symbol,
    /// `ε_{αβγ} = m_{αα'} m_{ββ'} m_{γγ'} ε^{α'β'γ'}`.
    MinkowskiLowered,
}

/// Totally antisymmetric symbol with `ε^{012} = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LeviCivita {
    pub convention: EpsilonConvention,
}

impl Default for LeviCivita {
    fn default() -> Self {
        Self {
            convention: EpsilonConvention::Symbol,
        }
    }
}

/// Sign of the permutation `(a, b, c)` of `(0, 1, 2)`, zero on repeated indices.
#[inline]
pub fn perm_sign(a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        _ => -1.0,
    }
}

impl LeviCivita {
    pub fn new(convention: EpsilonConvention) -> Self {
        Self { convention }
    }

    #[inline]
    pub fn upper(&self, a: usize, b: usize, c: usize) -> f64 {
        perm_sign(a, b, c)
    }

    #[inline]
    pub fn lower(&self, a: usize, b: usize, c: usize) -> f64 {
        match self.convention {
            EpsilonConvention::Symbol => perm_sign(a, b, c),
            EpsilonConvention::MinkowskiLowered => M[a] * M[b] * M[c] * perm_sign(a, b, c),
        }
    }

    /// Largest entrywise error of `ε_{αi0}ε^{αβγ} = δ^β_i δ^γ_0 − δ^β_0 δ^γ_i`.
    pub fn contraction_error(&self) -> f64 {
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut worst: f64 = 0.0;
        for i in 1..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let lhs: f64 = (0..3).map(|a| self.lower(a, i, 0) * self.upper(a, b, c)).sum();
                    let rhs = delta(b, i) * delta(c, 0) - delta(b, 0) * delta(c, i);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }
}

/// Vorticity and derivatives at one point, derived from a [`StatePoint`].
#[derive(Debug, Clone, Copy, Default)]
pub struct VortexPoint {
    pub w: [f64; 3],
    /// `dw[α][κ] = ∂_κ w^α`.
    pub dw: [[f64; 3]; 3],
    /// `ddw[α][κ][λ] = ∂_κ∂_λ w^α`.
    pub ddw: [[[f64; 3]; 3]; 3],
}

impl VortexPoint {
    pub fn from_point(p: &StatePoint, order: usize) -> Self {
        let mut out = VortexPoint::default();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let e = perm_sign(a, b, c);
                    if e == 0.0 {
                        continue;
                    }
                    let ec = e * M[c];
                    let vc = &p.v[c];
                    out.w[a] += ec * vc.d1[b];
                    if order >= 2 {
                        for k in 0..3 {
                            out.dw[a][k] += ec * vc.d2[k][b];
                            if order >= 3 {
                                for l in 0..3 {
                                    out.ddw[a][k][l] += ec * vc.d3[k][l][b];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Modified vorticity `W` and, when third-order data exist, `dW[α][κ] = ∂_κ W^α`.
pub fn big_w_point(
    p: &StatePoint,
    vp: &VortexPoint,
    eos: &EquationOfState,
    with_derivative: bool,
) -> ([f64; 3], [[f64; 3]; 3]) {
    let h = p.h.val;
    let cs2 = eos.cs2(h);
    let coef = 1.0 - 1.0 / cs2;
    let dcoef = 2.0 * eos.cs_dcs(h) / (cs2 * cs2);
    let mut big_w = [0.0; 3];
    let mut dbig_w = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let e = perm_sign(a, b, c);
                if e == 0.0 {
                    continue;
                }
                let wc = M[c] * vp.w[c];
                big_w[a] += e * (M[c] * vp.dw[c][b] + coef * wc * p.h.d1[b]);
                if with_derivative {
                    for k in 0..3 {
                        dbig_w[a][k] += e
                            * (M[c] * vp.ddw[c][b][k]
                                + dcoef * p.h.d1[k] * wc * p.h.d1[b]
                                + coef * (M[c] * vp.dw[c][k] * p.h.d1[b] + wc * p.h.d2[k][b]));
                    }
                }
            }
        }
    }
    (big_w, dbig_w)
}

fn div_v(p: &StatePoint) -> f64 {
    (0..3).map(|k| p.v[k].d1[k]).sum()
}

/// Residual of `v^κ∂_κw^α = w^κ∂^αv_κ − w^α∂_κv^κ`.
pub fn transport_w_point(p: &StatePoint, vp: &VortexPoint) -> [f64; 3] {
    let dv = div_v(p);
    let mut r = [0.0; 3];
    for (a, ra) in r.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..3 {
            acc += p.v[k].val * vp.dw[a][k];
            acc -= vp.w[k] * M[a] * M[k] * p.v[k].d1[a];
        }
        *ra = acc + vp.w[a] * dv;
    }
    r
}

/// Residual of the full transport law for `W`.
pub fn transport_big_w_point(
    p: &StatePoint,
    vp: &VortexPoint,
    eos: &EquationOfState,
) -> [f64; 3] {
    let (_, dbw) = big_w_point(p, vp, eos, true);
    let h = p.h.val;
    let cs2 = eos.cs2(h);
    let cm2m1 = 1.0 / cs2 - 1.0;
    let c3cp = eos.cs_dcs(h) / (cs2 * cs2);
    let dv = div_v(p);
    let vdh: f64 = (0..3).map(|k| p.v[k].val * p.h.d1[k]).sum();
    let mut r = [0.0; 3];
    for (a, ra) in r.iter_mut().enumerate() {
        let mut lhs = 0.0;
        for k in 0..3 {
            lhs += p.v[k].val * dbw[a][k];
        }
        let mut rhs = 0.0;
        for b in 0..3 {
            for c in 0..3 {
                let e = perm_sign(a, b, c);
                if e == 0.0 {
                    continue;
                }
                let wc = M[c] * vp.w[c];
                let mut t = 0.0;
                for k in 0..3 {
                    t -= p.v[k].d1[b] * M[c] * vp.dw[c][k];
                    t += vp.dw[k][b] * M[k] * p.v[k].d1[c];
                    t -= cm2m1 * p.v[k].val * M[c] * vp.dw[c][k] * p.h.d1[b];
                }
                t -= M[c] * vp.dw[c][b] * dv;
                let dcoef_v: f64 = (0..3)
                    .map(|k| (-2.0 * c3cp * p.h.d1[b] * p.v[k].val + cm2m1 * p.v[k].d1[b]) * p.h.d1[k])
                    .sum();
                t += wc * dcoef_v;
                t += 2.0 * c3cp * vdh * wc * p.h.d1[b];
                rhs += e * t;
            }
        }
        *ra = lhs - rhs;
    }
    r
}

/// Residual of the stiff two-term transport law for `W`.
pub fn transport_big_w_stiff_point(p: &StatePoint, vp: &VortexPoint) -> [f64; 3] {
    let stiff = EquationOfState::stiff();
    let (_, dbw) = big_w_point(p, vp, &stiff, true);
    let mut r = [0.0; 3];
    for (a, ra) in r.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..3 {
            acc += p.v[k].val * dbw[a][k];
        }
        for b in 0..3 {
            for c in 0..3 {
                let e = perm_sign(a, b, c);
                if e == 0.0 {
                    continue;
                }
                for k in 0..3 {
                    acc += e * p.v[k].d1[b] * M[c] * vp.dw[c][k];
                    acc -= e * M[k] * vp.dw[k][b] * p.v[k].d1[c];
                }
            }
        }
        *ra = acc;
    }
    r
}

fn fields3(grid: Grid2D, data: [Vec<f64>; 3]) -> [ScalarField2D; 3] {
    data.map(|v| ScalarField2D::new(grid, v).expect("finite derived field"))
}

fn pointwise3(jets: &StateJets, f: impl Fn(&StatePoint) -> [f64; 3]) -> Result<[ScalarField2D; 3]> {
    let g = *jets.grid();
    let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for k in 0..g.len() {
        let r = f(&jets.point(k));
        for a in 0..3 {
            if !r[a].is_finite() {
                return Err(Error::NonFinite {
                    what: "pointwise derived quantity".into(),
                    index: k,
                });
            }
            out[a][k] = r[a];
        }
    }
    Ok(fields3(g, out))
}

/// `w` at slice `n` (needs two neighbours on each side).
pub fn compute_vorticity(traj: &Trajectory, n: usize) -> Result<[ScalarField2D; 3]> {
    let jets = StateJets::at(traj, n, 1)?;
    vorticity_from_jets(&jets)
}

pub fn vorticity_from_jets(jets: &StateJets) -> Result<[ScalarField2D; 3]> {
    jets.require_order(1)?;
    pointwise3(jets, |p| VortexPoint::from_point(p, 1).w)
}

/// `∂_α w^α`.
pub fn vorticity_divergence(jets: &StateJets) -> Result<ScalarField2D> {
    jets.require_order(2)?;
    let g = *jets.grid();
    let values = (0..g.len())
        .map(|k| {
            let vp = VortexPoint::from_point(&jets.point(k), 2);
            vp.dw[0][0] + vp.dw[1][1] + vp.dw[2][2]
        })
        .collect();
    ScalarField2D::new(g, values)
}

/// `W^α = ε^{αβγ}∂_β w_γ + (1 − c_s^{-2}) ε^{αβγ} w_γ ∂_β h`.
pub fn compute_big_w(jets: &StateJets, eos: &EquationOfState) -> Result<[ScalarField2D; 3]> {
    jets.require_order(2)?;
    pointwise3(jets, |p| {
        let vp = VortexPoint::from_point(p, 2);
        big_w_point(p, &vp, eos, false).0
    })
}

/// Both vorticities at one slice.
#[derive(Debug, Clone)]
pub struct VorticityPair {
    pub w: [ScalarField2D; 3],
    pub big_w: [ScalarField2D; 3],
}

pub fn vorticity_pair(traj: &Trajectory, n: usize, eos: &EquationOfState) -> Result<VorticityPair> {
    let jets = StateJets::at(traj, n, 2)?;
    Ok(VorticityPair {
        w: vorticity_from_jets(&jets)?,
        big_w: compute_big_w(&jets, eos)?,
    })
}

/// Residual fields at one slice with their combined L² norm.
#[derive(Debug, Clone)]
pub struct SliceResidual {
    pub slice: usize,
    pub time: f64,
    pub fields: [ScalarField2D; 3],
    pub l2: f64,
}

/// Combined L² norm of a vector field.
pub fn l2_norm3(f: &[ScalarField2D; 3]) -> f64 {
    f.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
}

fn slice_residuals(
    traj: &Trajectory,
    order: usize,
    f: &dyn Fn(&StateJets) -> Result<[ScalarField2D; 3]>,
) -> Result<Vec<SliceResidual>> {
    if traj.len() < 7 {
        return Err(Error::TooFewSlices {
            need: 7,
            have: traj.len(),
        });
    }
    let hw = crate::jet::half_width(order);
    (hw..traj.len() - hw)
        .map(|n| {
            let jets = StateJets::at(traj, n, order)?;
            let fields = f(&jets)?;
            Ok(SliceResidual {
                slice: n,
                time: traj.time(n),
                l2: l2_norm3(&fields),
                fields,
            })
        })
        .collect()
}

pub fn transport_residual_w_at(jets: &StateJets) -> Result<[ScalarField2D; 3]> {
    jets.require_order(2)?;
    pointwise3(jets, |p| transport_w_point(p, &VortexPoint::from_point(p, 2)))
}

pub fn transport_residual_big_w_at(
    jets: &StateJets,
    eos: &EquationOfState,
) -> Result<[ScalarField2D; 3]> {
    jets.require_order(3)?;
    pointwise3(jets, |p| transport_big_w_point(p, &VortexPoint::from_point(p, 3), eos))
}

pub fn transport_residual_big_w_stiff_at(jets: &StateJets) -> Result<[ScalarField2D; 3]> {
    jets.require_order(3)?;
    pointwise3(jets, |p| transport_big_w_stiff_point(p, &VortexPoint::from_point(p, 3)))
}

/// Transport residual of `w` at every interior slice (≥ 7 slices).
pub fn transport_residual_w(traj: &Trajectory) -> Result<Vec<SliceResidual>> {
    slice_residuals(traj, 2, &transport_residual_w_at)
}

/// Transport residual of `W` at every slice admitting a third-order jet.
pub fn transport_residual_big_w(
    traj: &Trajectory,
    eos: &EquationOfState,
) -> Result<Vec<SliceResidual>> {
    slice_residuals(traj, 3, &|j| transport_residual_big_w_at(j, eos))
}

/// Outcome of the Hodge-type identity checks at one slice.
#[derive(Debug, Clone, Serialize)]
pub struct HodgeReport {
    pub convention: EpsilonConvention,
    pub contraction_max_error: f64,
    /// L² residual of the `div ẘ` reconstruction.
    pub div_reconstruction_l2: f64,
    /// L² residuals of the `∂_i w_0` reconstruction, i = 1, 2.
    pub dw0_reconstruction_l2: [f64; 2],
    /// L² residuals of the curl-to-`W` rewrite of that reconstruction.
    pub w_form_l2: [f64; 2],
    /// Same rewrite with the opposite sign on the enthalpy-gradient correction.
    pub w_form_printed_sign_l2: [f64; 2],
    pub w_l2: f64,
}

impl HodgeReport {
    pub fn contraction_ok(&self) -> bool {
        self.contraction_max_error == 0.0
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.contraction_ok()
            && self.div_reconstruction_l2 <= tol
            && self.dw0_reconstruction_l2.iter().all(|r| *r <= tol)
            && self.w_form_l2.iter().all(|r| *r <= tol)
    }
}

/// Contraction identity plus the `div ẘ` and `∂_i w_0` reconstructions at one slice.
pub fn hodge_identity_checks(
    jets: &StateJets,
    eos: &EquationOfState,
    eps: &LeviCivita,
) -> Result<HodgeReport> {
    jets.require_order(2)?;
    let g = *jets.grid();
    let n = g.len();
    let mut div_res = vec![0.0; n];
    let mut dw0_res = [vec![0.0; n], vec![0.0; n]];
    let mut wf_res = [vec![0.0; n], vec![0.0; n]];
    let mut wf_printed = [vec![0.0; n], vec![0.0; n]];
    let mut w_sq = vec![0.0; n];
    for k in 0..n {
        let p = jets.point(k);
        let vp = VortexPoint::from_point(&p, 2);
        let (big_w, _) = big_w_point(&p, &vp, eos, false);
        let v0 = p.v[0].val;
        let dv = div_v(&p);
        let coef = 1.0 - 1.0 / eos.cs2(p.h.val);
        w_sq[k] = vp.w.iter().map(|x| x * x).sum();

        let div_w = vp.dw[1][1] + vp.dw[2][2];
        let mut rhs = vp.w[0] * dv;
        for i in 1..3 {
            rhs += p.v[i].val * vp.dw[0][i];
        }
        for kk in 0..3 {
            rhs += vp.w[kk] * M[kk] * p.v[kk].d1[0];
        }
        div_res[k] = div_w - rhs / v0;

        for i in 1..3 {
            let mut curl = 0.0;
            let mut w_contr = 0.0;
            for a in 0..3 {
                let lo = eps.lower(a, i, 0);
                if lo == 0.0 {
                    continue;
                }
                w_contr += lo * big_w[a];
                for b in 0..3 {
                    for c in 0..3 {
                        curl += lo * eps.upper(a, b, c) * M[c] * vp.dw[c][b];
                    }
                }
            }
            let mut rest = -vp.w[i] * dv;
            for j in 1..3 {
                rest -= p.v[j].val * vp.dw[i][j];
            }
            for kk in 0..3 {
                rest += vp.w[kk] * M[kk] * p.v[kk].d1[i];
            }
            let dw0 = M[0] * vp.dw[0][i];
            dw0_res[i - 1][k] = dw0 - (curl + rest / v0);
            let corr = coef * (vp.w[i] * p.h.d1[0] - M[0] * vp.w[0] * p.h.d1[i]);
            wf_res[i - 1][k] = curl - (w_contr + corr);
            wf_printed[i - 1][k] = curl - (w_contr - corr);
        }
    }
    let l2 = |v: Vec<f64>| ScalarField2D::new(g, v).map(|f| f.l2_norm());
    let [a, b] = dw0_res;
    let [c, d] = wf_res;
    let [e, f] = wf_printed;
    Ok(HodgeReport {
        convention: eps.convention,
        contraction_max_error: eps.contraction_error(),
        div_reconstruction_l2: l2(div_res)?,
        dw0_reconstruction_l2: [l2(a)?, l2(b)?],
        w_form_l2: [l2(c)?, l2(d)?],
        w_form_printed_sign_l2: [l2(e)?, l2(f)?],
        w_l2: (w_sq.iter().sum::<f64>() * g.cell_area()).sqrt(),
    })
}

/// Residual summary serialized next to a run.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub scenario: String,
    pub nx: usize,
    pub dt: f64,
    pub slice: usize,
    pub residual_l2: std::collections::BTreeMap<String, f64>,
}
