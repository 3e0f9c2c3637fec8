//! Verification passes over an evolved trajectory.

use crate::config::RunConfig;
use releuler::diagnostics::{energy_series, gronwall_audit, EnergyReport, GronwallReport};
use releuler::elliptic::{curl_w_rhs, ellipticity_minors, solve_vminus, SolveOptions};
use releuler::field::Grid2D;
use releuler::geometry::{build_null_frame, check_ordering, evolve_foliation};
use releuler::hyperbolic::{cfl_dt, evolve_steps, EvolveOptions, Silent, Trajectory};
use releuler::jet::StateJets;
use releuler::scenario::initial_state;
use releuler::thermo::EquationOfState;
use releuler::vorticity::{hodge_identity_checks, l2_norm3, vorticity_divergence, vorticity_from_jets, LeviCivita};
use releuler::wave::{observed_order, stiff_checks, wave_residuals, ConvergenceRow, StiffReport, WaveResidualNorms};
use serde::Serialize;
use std::collections::BTreeMap;

/// Residuals below this are treated as converged to roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;
/// Minimum observed order under refinement.
pub const MIN_ORDER: f64 = 3.0;
pub const CONSTRAINT_TOL: f64 = 1e-14;
pub const MINORS_TOL: f64 = 1e-12;
pub const DIVERGENCE_RATIO_TOL: f64 = 1e-8;
/// Absolute bound on the divergence when `w` itself vanishes.
pub const DIVERGENCE_ABS_TOL: f64 = 1e-11;
pub const STIFF_D_TOL: f64 = 1e-10;
pub const STIFF_Q_TOL: f64 = 1e-12;
pub const FRAME_TOL: f64 = 1e-8;
pub const PHASE_TOL: f64 = 0.01;
pub const SOLVER_TOL: f64 = 1e-9;

/// Hodge reconstruction tolerance: `1e−6` at `nx = 128`, scaled with fourth-order convergence.
pub fn hodge_tolerance(nx: usize) -> f64 {
    1e-6 * (128.0 / nx as f64).powi(4)
}

/// Outcome of one verification pass.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared with `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CheckResult {
    fn new(name: &str, passed: bool, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            threshold,
            detail,
            metrics: BTreeMap::new(),
        }
    }

    fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.into(), v);
        self
    }
}

/// Order check that also accepts residuals already at roundoff.
pub fn converges(coarse: f64, fine: f64) -> (bool, f64) {
    let order = observed_order(coarse, fine);
    (fine <= ROUNDOFF_FLOOR || order >= MIN_ORDER, order)
}

/// `max_n |e^{−2h}v^αv_α + 1|` over every slice.
pub fn check_constraint(traj: &Trajectory) -> CheckResult {
    let worst = traj.states.iter().map(|s| s.constraint_defect()).fold(0.0, f64::max);
    CheckResult::new(
        "constraint",
        worst <= CONSTRAINT_TOL,
        worst,
        CONSTRAINT_TOL,
        format!("max constraint defect {worst:.3e} over {} slices", traj.len()),
    )
}

/// Leading principal minors of `Id − P` on every slice.
pub fn check_minors(traj: &Trajectory) -> CheckResult {
    let (mut p1, mut p2, mut p3) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for st in &traj.states {
        let [a, b, c] = ellipticity_minors(st);
        p1 = a.values().iter().fold(p1, |m, x| m.min(*x));
        p2 = b.values().iter().fold(p2, |m, x| m.min(*x));
        p3 = c.values().iter().fold(p3, |m, x| m.max((x - 1.0).abs()));
    }
    let value = (1.0 - p1).max(1.0 - p2).max(p3);
    CheckResult::new(
        "minors",
        value <= MINORS_TOL,
        value,
        MINORS_TOL,
        format!("min p1 {p1:.6}, min p2 {p2:.6}, max |p3 − 1| {p3:.3e}"),
    )
    .metric("min_p1", p1)
    .metric("min_p2", p2)
    .metric("max_p3_defect", p3)
}

fn mid_slice(traj: &Trajectory) -> usize {
    traj.len() / 2
}

/// `‖∂_αw^α‖₂ / ‖w‖₂` at the middle slice.
pub fn check_divergence(traj: &Trajectory) -> releuler::Result<CheckResult> {
    let n = mid_slice(traj);
    let jets = StateJets::at(traj, n, 2)?;
    let w = l2_norm3(&vorticity_from_jets(&jets)?);
    let div = vorticity_divergence(&jets)?.l2_norm();
    let res = if div <= DIVERGENCE_ABS_TOL {
        CheckResult::new(
            "divergence",
            true,
            div,
            DIVERGENCE_ABS_TOL,
            format!("‖div w‖ {div:.3e} at slice {n} (‖w‖ {w:.3e})"),
        )
    } else {
        let ratio = if w > 0.0 { div / w } else { f64::INFINITY };
        CheckResult::new(
            "divergence",
            ratio <= DIVERGENCE_RATIO_TOL,
            ratio,
            DIVERGENCE_RATIO_TOL,
            format!("‖div w‖/‖w‖ = {ratio:.3e} at slice {n}"),
        )
    };
    Ok(res.metric("div_l2", div).metric("w_l2", w))
}

/// Contraction identity and reconstructions at the middle slice.
pub fn check_hodge(traj: &Trajectory, eos: &EquationOfState, config: &RunConfig) -> releuler::Result<CheckResult> {
    let n = mid_slice(traj);
    let jets = StateJets::at(traj, n, 2)?;
    let eps = LeviCivita::new(config.convention());
    let r = hodge_identity_checks(&jets, eos, &eps)?;
    let tol = hodge_tolerance(config.nx);
    let value = [r.div_reconstruction_l2]
        .iter()
        .chain(&r.dw0_reconstruction_l2)
        .chain(&r.w_form_l2)
        .fold(0.0f64, |m, x| m.max(*x));
    let detail = if r.contraction_ok() {
        format!("max reconstruction residual {value:.3e} at slice {n}")
    } else {
        format!(
            "contraction identity fails under the {} convention (error {})",
            config.epsilon_convention, r.contraction_max_error
        )
    };
    Ok(CheckResult::new("hodge", r.passed(tol), value, tol, detail)
        .metric("contraction_error", r.contraction_max_error)
        .metric("div_reconstruction_l2", r.div_reconstruction_l2)
        .metric("w_l2", r.w_l2))
}

/// Two resolutions with paired time steps, evaluated at a common time.
pub struct RefinementPair {
    pub coarse: Trajectory,
    pub fine: Trajectory,
    pub nx: [usize; 2],
    /// Evaluation slice on each level.
    pub slice: [usize; 2],
    /// `v₋` slab on each level.
    pub slab: [(usize, usize); 2],
}

/// Steps of the coarse run; the fine run takes twice as many of half the size.
const PAIR_STEPS: usize = 16;

impl RefinementPair {
    /// Runs the configured preset at `nx/2` and `nx`.
    pub fn build(config: &RunConfig, eos: &EquationOfState) -> releuler::Result<Self> {
        let (nx, ny) = (config.nx / 2, config.ny / 2);
        let preset = config.preset();
        let two_pi = 2.0 * std::f64::consts::PI;
        let coarse_grid = Grid2D::new(nx, ny, two_pi, two_pi)?;
        let fine_grid = config.grid();
        let dt = cfl_dt(&coarse_grid, config.cfl);
        let opts = EvolveOptions {
            cfl: config.cfl,
            filter: config.filter,
        };
        let run = |g: &Grid2D, dt: f64, steps: usize| {
            let s0 = initial_state(preset, g, eos, config.amplitude, config.seed)?;
            evolve_steps(&s0, dt, steps, eos, &opts, &mut Silent)
        };
        Ok(Self {
            coarse: run(&coarse_grid, dt, PAIR_STEPS)?,
            fine: run(&fine_grid, dt / 2.0, 2 * PAIR_STEPS)?,
            nx: [nx, config.nx],
            slice: [PAIR_STEPS / 2, PAIR_STEPS],
            slab: [(2, PAIR_STEPS - 2), (4, 2 * PAIR_STEPS - 4)],
        })
    }

    fn levels(&self) -> [&Trajectory; 2] {
        [&self.coarse, &self.fine]
    }
}

/// Wave residual norms on both levels, with the `v₋` solver residuals when requested.
#[derive(Debug, Clone, Serialize)]
pub struct PairResiduals {
    pub nx: [usize; 2],
    pub dt: [f64; 2],
    pub time: f64,
    pub norms: [WaveResidualNorms; 2],
    /// Largest final relative residual of the `v₋` solves per level.
    pub solver_residual: Option<[f64; 2]>,
}

impl PairResiduals {
    pub fn compute(pair: &RefinementPair, eos: &EquationOfState, with_vplus: bool) -> releuler::Result<Self> {
        let mut norms = Vec::new();
        let mut solver = Vec::new();
        for (k, traj) in pair.levels().into_iter().enumerate() {
            let n = pair.slice[k];
            if with_vplus {
                let (n0, n1) = pair.slab[k];
                let rhs = curl_w_rhs(traj, n0, n1)?;
                let vm = solve_vminus(traj, n0, n1, &rhs, &SolveOptions::default())?;
                solver.push(vm.diagnostics.iter().fold(0.0f64, |m, d| m.max(d.final_residual)));
                norms.push(wave_residuals(traj, n, eos, Some(&vm))?.norms());
            } else {
                norms.push(wave_residuals(traj, n, eos, None)?.norms());
            }
        }
        let [a, b]: [WaveResidualNorms; 2] = norms.try_into().expect("two levels");
        Ok(Self {
            nx: pair.nx,
            dt: [pair.coarse.dt, pair.fine.dt],
            time: pair.fine.time(pair.slice[1]),
            norms: [a, b],
            solver_residual: if with_vplus { Some([solver[0], solver[1]]) } else { None },
        })
    }

    fn series(&self) -> Vec<(&'static str, [Option<f64>; 2])> {
        let [a, b] = &self.norms;
        vec![
            ("h", [Some(a.res_h), Some(b.res_h)]),
            ("v", [Some(a.res_v), Some(b.res_v)]),
            ("vplus", [a.res_vplus, b.res_vplus]),
            ("vplus_printed", [a.res_vplus_printed, b.res_vplus_printed]),
            ("vplus_tt", [a.res_vplus_tt, b.res_vplus_tt]),
        ]
    }

    /// Rows of the convergence table.
    pub fn rows(&self, scenario: &str) -> Vec<ConvergenceRow> {
        let mut out = Vec::new();
        for (eq, vals) in self.series() {
            if let [Some(c), Some(f)] = vals {
                for (k, v) in [c, f].into_iter().enumerate() {
                    out.push(ConvergenceRow {
                        scenario: scenario.into(),
                        nx: self.nx[k],
                        dt: self.dt[k],
                        equation: eq.into(),
                        l2_residual: v,
                        observed_order: (k == 1).then(|| observed_order(c, f)),
                    });
                }
            }
        }
        out
    }
}

fn order_check(name: &str, pairs: &[(&str, f64, f64)]) -> CheckResult {
    let mut passed = true;
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    let mut metrics = BTreeMap::new();
    for (eq, c, f) in pairs {
        let (ok, order) = converges(*c, *f);
        passed &= ok;
        if *f > ROUNDOFF_FLOOR {
            worst = worst.min(order);
        }
        parts.push(format!("{eq}: {c:.3e} → {f:.3e} (order {order:.2})"));
        metrics.insert(format!("{eq}_coarse"), *c);
        metrics.insert(format!("{eq}_fine"), *f);
        metrics.insert(format!("{eq}_order"), order);
    }
    CheckResult {
        name: name.into(),
        passed,
        value: worst,
        threshold: MIN_ORDER,
        detail: parts.join("; "),
        metrics,
    }
}

/// `□_g h − D` and the `v` equation converge at order ≥ 3.
pub fn check_wave(res: &PairResiduals) -> CheckResult {
    let [a, b] = &res.norms;
    order_check("wave", &[("h", a.res_h, b.res_h), ("v", a.res_v, b.res_v)])
}

/// Improved `v₊` equation converges at order ≥ 3 with converged `v₋` solves.
pub fn check_vplus(res: &PairResiduals) -> CheckResult {
    let [a, b] = &res.norms;
    let (Some(c), Some(f)) = (a.res_vplus, b.res_vplus) else {
        return CheckResult::new("vplus", false, f64::NAN, MIN_ORDER, "v₊ residuals were not computed".into());
    };
    let mut out = order_check("vplus", &[("vplus", c, f)]);
    if let Some(s) = res.solver_residual {
        let worst = s[0].max(s[1]);
        out.metrics.insert("solver_relative_residual".into(), worst);
        if !(worst <= SOLVER_TOL) {
            out.passed = false;
            out.detail.push_str(&format!("; v₋ solve residual {worst:.3e} above {SOLVER_TOL:e}"));
        }
    }
    out
}

/// Stiff identities on the fine trajectory; `□v` convergence for irrotational data when a pair is given.
pub fn check_stiff(
    traj: &Trajectory,
    eos: &EquationOfState,
    rotational: bool,
    pair: Option<&RefinementPair>,
) -> releuler::Result<(CheckResult, StiffReport)> {
    let n = mid_slice(traj);
    let r = stiff_checks(traj, n, eos)?;
    let mut passed = r.d_identity_max <= STIFF_D_TOL && r.q_max <= STIFF_Q_TOL && r.metric_is_minkowski;
    let mut detail = format!(
        "D identity {:.3e}, Q {:.3e}, Minkowski metric {}",
        r.d_identity_max, r.q_max, r.metric_is_minkowski
    );
    let mut out = CheckResult::new("stiff", true, r.d_identity_max, STIFF_D_TOL, String::new())
        .metric("d_identity_max", r.d_identity_max)
        .metric("d_identity_printed_sign_max", r.d_identity_printed_sign_max)
        .metric("q_max", r.q_max)
        .metric("box_v_l2", r.box_v_l2)
        .metric("div_v_l2", r.div_v_l2);
    if let (false, Some(p)) = (rotational, pair) {
        let c = stiff_checks(&p.coarse, p.slice[0], eos)?.box_v_l2;
        let f = stiff_checks(&p.fine, p.slice[1], eos)?.box_v_l2;
        let (ok, order) = converges(c, f);
        passed &= ok;
        detail.push_str(&format!("; ‖□v‖ {c:.3e} → {f:.3e} (order {order:.2})"));
        out = out.metric("box_v_order", order);
    }
    out.passed = passed;
    out.detail = detail;
    Ok((out, r))
}

/// Gram and null defects along every configured leaf, and leaf ordering.
pub fn check_frame(traj: &Trajectory, eos: &EquationOfState, config: &RunConfig) -> releuler::Result<CheckResult> {
    let dir = config.direction();
    let mut fols = Vec::new();
    let (mut gram, mut null) = (0.0f64, 0.0f64);
    for &r in &config.leaves {
        let fol = evolve_foliation(traj, eos, dir, r, 0)?;
        let frame = build_null_frame(traj, eos, &fol)?;
        gram = gram.max(frame.gram_defect());
        null = null.max(fol.null_defect);
        fols.push(fol);
    }
    check_ordering(&fols)?;
    let value = gram.max(null);
    Ok(CheckResult::new(
        "frame",
        value <= FRAME_TOL,
        value,
        FRAME_TOL,
        format!("Gram defect {gram:.3e}, null defect {null:.3e} over {} leaves", fols.len()),
    )
    .metric("gram_defect", gram)
    .metric("null_defect", null))
}

/// `K(t) ≤ factor·K(0)`.
pub fn check_gronwall(
    traj: &Trajectory,
    eos: &EquationOfState,
    reports: &[EnergyReport],
    config: &RunConfig,
) -> releuler::Result<(CheckResult, GronwallReport)> {
    let g = gronwall_audit(traj, eos, reports, config.s, config.gronwall_factor)?;
    let k0 = g.samples[0].k;
    let res = CheckResult::new(
        "gronwall",
        !g.violated,
        g.k_max,
        config.gronwall_factor * k0,
        format!("max K {:.4} against {} × K(0) = {:.4}", g.k_max, config.gronwall_factor, k0),
    )
    .metric("k0", k0);
    Ok((res, g))
}

/// Energy series with the configured exponents.
pub fn energy(traj: &Trajectory, eos: &EquationOfState, config: &RunConfig) -> releuler::Result<Vec<EnergyReport>> {
    energy_series(traj, eos, config.s, config.s_prime)
}

/// Phase speed of the lowest `x1` mode of `h`, fitted over the run.
pub fn measured_phase_speed(traj: &Trajectory) -> f64 {
    let g = traj.grid();
    let k = 2.0 * std::f64::consts::PI / g.lx;
    let mut phases: Vec<f64> = Vec::with_capacity(traj.len());
    for st in &traj.states {
        let p = -st.h.spectrum().coeff(1, 0).arg();
        let p = match phases.last() {
            Some(&prev) => prev + (p - prev + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI,
            None => p,
        };
        phases.push(p);
    }
    let n = phases.len() as f64;
    let ts: Vec<f64> = (0..traj.len()).map(|i| traj.time(i)).collect();
    let (mt, mp) = (ts.iter().sum::<f64>() / n, phases.iter().sum::<f64>() / n);
    let num: f64 = ts.iter().zip(&phases).map(|(t, p)| (t - mt) * (p - mp)).sum();
    let den: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    num / den / k
}

/// Plane-wave phase speed within 1% of `c_s(h̄)`.
pub fn check_phase(traj: &Trajectory, eos: &EquationOfState) -> CheckResult {
    let expected = eos.cs(eos.background_h());
    let speed = measured_phase_speed(traj);
    let rel = ((speed - expected) / expected).abs();
    CheckResult::new(
        "phase",
        rel <= PHASE_TOL,
        rel,
        PHASE_TOL,
        format!("phase speed {speed:.6} against c_s = {expected:.6}"),
    )
    .metric("phase_speed", speed)
    .metric("sound_speed", expected)
}
