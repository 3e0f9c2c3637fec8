//! Energy functional, Gronwall envelope, dyadic Strichartz tables and the truncated-data cascade.

use crate::error::{Error, Result};
use crate::field::{band_range, low_pass, lp_decompose, lp_norm, simpson, sobolev_norm, Axis, ScalarField2D};
use crate::hyperbolic::{evolve_steps, EvolveOptions, Silent, Trajectory};
use crate::jet::StateJets;
use crate::thermo::{EquationOfState, FluidState};
use crate::vorticity::vorticity_from_jets;
use serde::Serialize;

/// Checks `s ∈ (7/4, 15/8]` and `7/4 ≤ s′ ≤ s`.
pub fn check_exponents(s: f64, s_prime: f64) -> Result<()> {
    if !(s > 1.75 && s <= 1.875) {
        return Err(Error::OutOfRange {
            what: "s".into(),
            detail: format!("{s} not in (7/4, 15/8]"),
        });
    }
    if !(s_prime >= 1.75 && s_prime <= s) {
        return Err(Error::OutOfRange {
            what: "s_prime".into(),
            detail: format!("{s_prime} not in [7/4, s = {s}]"),
        });
    }
    Ok(())
}

/// Background-subtracted parts of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    /// `‖h − h̄‖_{H^s}`.
    pub h_hs: f64,
    /// `‖v − v̄‖_{H^s}`, `v̄ = (e^{h̄}, 0, 0)`.
    pub v_hs: f64,
    /// `‖w‖_{H^{s′−1/4}}`.
    pub w_hs: f64,
    /// `‖∇w‖_{L⁸}`.
    pub grad_w_l8: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    pub parts: EnergyParts,
    /// `∫₀ᵗ ‖dh, dv‖_{L^∞} dτ`.
    pub strich_accum: f64,
}

fn norm3(fields: &[ScalarField2D], s: f64) -> Result<f64> {
    let mut acc = 0.0;
    for f in fields {
        acc += sobolev_norm(f, s)?.powi(2);
    }
    Ok(acc.sqrt())
}

/// Perturbation `(h − h̄, v − v̄)` of a state from the rest background of `eos`.
pub fn perturbation(state: &FluidState, eos: &EquationOfState) -> [ScalarField2D; 4] {
    let hb = eos.background_h();
    let v0b = hb.exp();
    [
        state.h.map(|h| h - hb),
        state.v0().map(|v| v - v0b),
        state.v1.clone(),
        state.v2.clone(),
    ]
}

/// Energy functional of a state with its vorticity `w`.
pub fn total_energy(
    state: &FluidState,
    eos: &EquationOfState,
    w: &[ScalarField2D; 3],
    s: f64,
    s_prime: f64,
    t: f64,
    strich_accum: f64,
) -> Result<EnergyReport> {
    check_exponents(s, s_prime)?;
    let [dh, dv0, dv1, dv2] = perturbation(state, eos);
    let h_hs = sobolev_norm(&dh, s)?;
    let v_hs = norm3(&[dv0, dv1, dv2], s)?;
    let w_hs = norm3(w, s_prime - 0.25)?;
    let g = *state.grid();
    let mut grad = vec![0.0; g.len()];
    for wa in w {
        for axis in [Axis::X1, Axis::X2] {
            let d = wa.derivative(axis)?;
            for (acc, v) in grad.iter_mut().zip(d.values()) {
                *acc += v * v;
            }
        }
    }
    let grad = ScalarField2D::new(g, grad.into_iter().map(f64::sqrt).collect())?;
    let parts = EnergyParts {
        h_hs,
        v_hs,
        w_hs,
        grad_w_l8: lp_norm(&grad, 8.0),
    };
    Ok(EnergyReport {
        t,
        energy: h_hs + v_hs + w_hs + parts.grad_w_l8,
        parts,
        strich_accum,
    })
}

/// `sup_x max(|∂_α h|, |∂_α v^β|)` from first-order jets.
pub fn first_derivative_sup(jets: &StateJets) -> f64 {
    let mut worst: f64 = 0.0;
    for jet in std::iter::once(&jets.h).chain(jets.v.iter()) {
        for a in 0..3 {
            worst = worst.max(jet.d(&[a]).max_abs());
        }
    }
    worst
}

/// Energy report at every slice, with `∂_t` from the evolution equations.
pub fn energy_series(traj: &Trajectory, eos: &EquationOfState, s: f64, s_prime: f64) -> Result<Vec<EnergyReport>> {
    check_exponents(s, s_prime)?;
    let mut out = Vec::with_capacity(traj.len());
    let mut accum = 0.0;
    let mut prev: Option<f64> = None;
    for (n, state) in traj.states.iter().enumerate() {
        let jets = StateJets::from_state(state, eos, traj.time(n))?;
        let sup = first_derivative_sup(&jets);
        if let Some(p) = prev {
            accum += 0.5 * traj.dt * (p + sup);
        }
        prev = Some(sup);
        let w = vorticity_from_jets(&jets)?;
        out.push(total_energy(state, eos, &w, s, s_prime, traj.time(n), accum)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GronwallSample {
    pub t: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    pub a: f64,
    pub factor: f64,
    pub samples: Vec<GronwallSample>,
    /// Fitted constant `max_t K(t)`.
    pub k_max: f64,
    pub violated: bool,
}

/// `K(t) = ‖(h,v)(t)‖_{H^a} / (‖(h,v)(0)‖_{H^a} exp ∫₀ᵗ ‖dh,dv‖_{L^∞})` on background-subtracted data.
pub fn gronwall_audit(
    traj: &Trajectory,
    eos: &EquationOfState,
    reports: &[EnergyReport],
    a: f64,
    factor: f64,
) -> Result<GronwallReport> {
    if reports.len() != traj.len() {
        return Err(Error::OutOfRange {
            what: "energy reports".into(),
            detail: format!("{} reports for {} slices", reports.len(), traj.len()),
        });
    }
    let norm = |st: &FluidState| norm3(&perturbation(st, eos), a);
    let n0 = norm(&traj.states[0])?;
    let mut samples = Vec::with_capacity(traj.len());
    for (st, rep) in traj.states.iter().zip(reports) {
        let num = norm(st)?;
        let den = n0 * rep.strich_accum.exp();
        let k = if num == 0.0 && den == 0.0 {
            1.0
        } else if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        };
        samples.push(GronwallSample { t: rep.t, k });
    }
    let k0 = samples[0].k;
    let k_max = samples.iter().fold(f64::NEG_INFINITY, |m, s| m.max(s.k));
    Ok(GronwallReport {
        a,
        factor,
        violated: !(k_max <= factor * k0),
        samples,
        k_max,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandRow {
    pub j: i32,
    /// `‖P_j dv‖_{L⁴_t L^∞_x}`.
    pub dv: f64,
    /// `‖P_j dh‖_{L⁴_t L^∞_x}`.
    pub dh: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrichartzTable {
    pub rows: Vec<BandRow>,
    /// Unprojected `‖dv‖_{L⁴L^∞}` and `‖dh‖_{L⁴L^∞}`.
    pub total_dv: f64,
    pub total_dh: f64,
    /// Zero-mode parts, needed to close the triangle inequality.
    pub zero_mode_dv: f64,
    pub zero_mode_dh: f64,
    /// Decay exponents fitted on the tail bands, `‖P_j f‖ ≈ C 2^{−βj}`.
    pub beta_dv: Option<f64>,
    pub beta_dh: Option<f64>,
}

fn l4_time(values: &[f64], dt: f64) -> f64 {
    let p: Vec<f64> = values.iter().map(|v| v.powi(4)).collect();
    simpson(&p, dt).max(0.0).powf(0.25)
}

/// Least-squares decay exponent on the bands from the peak onward with non-negligible mass.
pub fn fit_tail_exponent(rows: &[(i32, f64)]) -> Option<f64> {
    let (peak_idx, peak) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, r)| (i, r.1))?;
    if !(peak > 0.0) {
        return None;
    }
    let tail: Vec<(f64, f64)> = rows[peak_idx..]
        .iter()
        .take_while(|r| r.1 > 1e-10 * peak)
        .map(|r| (r.0 as f64, r.1.log2()))
        .collect();
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|t| t.0).sum::<f64>() / n;
    let my = tail.iter().map(|t| t.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|t| (t.0 - mx) * (t.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|t| (t.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Per-band `L⁴_t L^∞_x` norms of the first derivatives of `h` and `v`.
pub fn dyadic_strichartz_table(traj: &Trajectory, eos: &EquationOfState) -> Result<StrichartzTable> {
    let (lo, hi) = band_range(traj.grid());
    let nb = (hi - lo + 1) as usize;
    let mut band_dv = vec![Vec::with_capacity(traj.len()); nb];
    let mut band_dh = vec![Vec::with_capacity(traj.len()); nb];
    let (mut tot_dv, mut tot_dh, mut zero_dv, mut zero_dh) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (n, state) in traj.states.iter().enumerate() {
        let jets = StateJets::from_state(state, eos, traj.time(n))?;
        let mut sup_dv = vec![0.0f64; nb];
        let mut sup_dh = vec![0.0f64; nb];
        let (mut t_dv, mut t_dh, mut z_dv, mut z_dh) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (q, jet) in std::iter::once(&jets.h).chain(jets.v.iter()).enumerate() {
            for a in 0..3 {
                let f = jet.d(&[a]);
                let (sup, tot, zero) = if q == 0 {
                    (&mut sup_dh, &mut t_dh, &mut z_dh)
                } else {
                    (&mut sup_dv, &mut t_dv, &mut z_dv)
                };
                *tot = tot.max(f.max_abs());
                *zero = zero.max(f.mean().abs());
                for band in lp_decompose(f) {
                    let k = (band.j - lo) as usize;
                    sup[k] = sup[k].max(band.field.max_abs());
                }
            }
        }
        for k in 0..nb {
            band_dv[k].push(sup_dv[k]);
            band_dh[k].push(sup_dh[k]);
        }
        tot_dv.push(t_dv);
        tot_dh.push(t_dh);
        zero_dv.push(z_dv);
        zero_dh.push(z_dh);
    }
    let dt = traj.dt;
    let rows: Vec<BandRow> = (0..nb)
        .map(|k| BandRow {
            j: lo + k as i32,
            dv: l4_time(&band_dv[k], dt),
            dh: l4_time(&band_dh[k], dt),
        })
        .collect();
    let pairs_dv: Vec<(i32, f64)> = rows.iter().map(|r| (r.j, r.dv)).collect();
    let pairs_dh: Vec<(i32, f64)> = rows.iter().map(|r| (r.j, r.dh)).collect();
    Ok(StrichartzTable {
        total_dv: l4_time(&tot_dv, dt),
        total_dh: l4_time(&tot_dh, dt),
        zero_mode_dv: l4_time(&zero_dv, dt),
        zero_mode_dh: l4_time(&zero_dh, dt),
        beta_dv: fit_tail_exponent(&pairs_dv),
        beta_dh: fit_tail_exponent(&pairs_dh),
        rows,
    })
}

/// Truncated initial data `P_{≤j}` at one cascade level.
#[derive(Debug, Clone)]
pub struct CascadeEntry {
    pub j: i32,
    pub t_star: f64,
    pub state: FluidState,
    pub vorticity: [ScalarField2D; 3],
    /// `‖h₀_{j+1} − h₀_j‖_{L²}`, absent at the last level.
    pub increment_l2: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CascadeSchedule {
    pub m0: f64,
    pub delta1: f64,
    pub c: f64,
    pub s: f64,
    pub jmax_requested: i32,
    pub jmax: i32,
    /// Set when the requested `jmax` was outside the grid's band range.
    pub clamped: bool,
    pub entries: Vec<CascadeEntry>,
}

impl CascadeSchedule {
    /// `max_j ‖h₀_{j+1} − h₀_j‖_{L²} 2^{sj}`, the fitted Bernstein constant times `‖h₀‖_{Ḣ^s}`.
    pub fn bernstein_sup(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.increment_l2.map(|d| d * 2f64.powf(self.s * e.j as f64)))
            .fold(0.0, f64::max)
    }
}

/// `T*_j = 2^{−δ₁j}(C·M₀)^{−3}`.
pub fn t_star(j: i32, m0: f64, delta1: f64, c: f64) -> f64 {
    2f64.powf(-delta1 * j as f64) * (c * m0).powi(-3)
}

/// Low-pass truncation of `h` and `v̊` at level `j`, with `v⁰` re-lifted.
pub fn truncate_state(state: &FluidState, j: i32) -> Result<FluidState> {
    let h = low_pass(&state.h, j);
    let v1 = low_pass(&state.v1, j);
    let v2 = low_pass(&state.v2, j);
    FluidState::new(h, v1, v2)
}

/// Builds the truncated-data ladder `j = 0..=jmax`.
pub fn cascade_prepare(
    state: &FluidState,
    eos: &EquationOfState,
    m0: f64,
    delta1: f64,
    jmax: i32,
    c: f64,
    s: f64,
) -> Result<CascadeSchedule> {
    check_exponents(s, s)?;
    if !(delta1 > 0.0 && delta1 <= 1.0 / 80.0) {
        return Err(Error::OutOfRange {
            what: "delta1".into(),
            detail: format!("{delta1} not in (0, 1/80]"),
        });
    }
    let bound = (s - 1.75) / 10.0;
    if delta1 > bound * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            what: "delta1".into(),
            detail: format!("{delta1} exceeds (s − 7/4)/10 = {bound}"),
        });
    }
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::OutOfRange {
            what: "M0".into(),
            detail: format!("{m0} must be positive"),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::OutOfRange {
            what: "C".into(),
            detail: format!("{c} must be positive"),
        });
    }
    let (lo, hi) = band_range(state.grid());
    let first = lo.max(0);
    let clamped_j = jmax.clamp(first, hi);
    let mut entries: Vec<CascadeEntry> = Vec::new();
    for j in first..=clamped_j {
        let st = truncate_state(state, j)?;
        st.check_admissible(eos)?;
        let jets = StateJets::from_state(&st, eos, 0.0)?;
        let w = vorticity_from_jets(&jets)?;
        if let Some(prev) = entries.last_mut() {
            prev.increment_l2 = Some((&st.h - &prev.state.h).l2_norm());
        }
        entries.push(CascadeEntry {
            j,
            t_star: t_star(j, m0, delta1, c),
            state: st,
            vorticity: w,
            increment_l2: None,
        });
    }
    Ok(CascadeSchedule {
        m0,
        delta1,
        c,
        s,
        jmax_requested: jmax,
        jmax: clamped_j,
        clamped: clamped_j != jmax,
        entries,
    })
}

/// `‖(h, v̊)_{j+1} − (h, v̊)_j‖_{L²}` after evolving adjacent cascade levels for `steps` steps of `dt`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CascadeDifference {
    pub j: i32,
    pub time: f64,
    pub diff_l2: f64,
}

pub fn cascade_differences(
    schedule: &CascadeSchedule,
    eos: &EquationOfState,
    dt: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Vec<CascadeDifference>> {
    let finals: Vec<FluidState> = schedule
        .entries
        .iter()
        .map(|e| evolve_steps(&e.state, dt, steps, eos, opts, &mut Silent).map(|t| t.last().clone()))
        .collect::<Result<_>>()?;
    Ok(schedule
        .entries
        .windows(2)
        .zip(finals.windows(2))
        .map(|(e, f)| {
            let d = [&f[1].h - &f[0].h, &f[1].v1 - &f[0].v1, &f[1].v2 - &f[0].v2];
            CascadeDifference {
                j: e[0].j,
                time: dt * steps as f64,
                diff_l2: d.iter().map(|x| x.l2_norm().powi(2)).sum::<f64>().sqrt(),
            }
        })
        .collect())
}
