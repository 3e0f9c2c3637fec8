//! Energy functional, Gronwall audit, dyadic Strichartz tables and the truncation cascade.

mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use releuler::diagnostics::*;
use releuler::field::{band_range, homogeneous_sobolev_norm, psi, Grid2D, ScalarField2D};
use releuler::hyperbolic::{cfl_dt, evolve, EvolveOptions, Silent, Trajectory};
use releuler::jet::StateJets;
use releuler::scenario::{background_state, initial_state, Preset};
use releuler::thermo::{EquationOfState, FluidState};
use releuler::vorticity::vorticity_from_jets;
use std::f64::consts::PI;

fn eos2() -> EquationOfState {
    EquationOfState::new(2.0).unwrap()
}

/// Direct DFT coefficients `(kx, ky, f̂)` with 1/N normalization.
fn brute_dft(f: &ScalarField2D) -> Vec<(f64, f64, Complex64)> {
    let g = *f.grid();
    let n = (g.nx * g.ny) as f64;
    let mut out = Vec::new();
    for q in 0..g.ny {
        for p in 0..g.nx {
            let (kx, ky) = (g.kx(p), g.ky(q));
            let mut c = Complex64::new(0.0, 0.0);
            for j in 0..g.ny {
                for i in 0..g.nx {
                    c += f.at(i, j) * Complex64::from_polar(1.0, -(kx * g.x(i) + ky * g.y(j)));
                }
            }
            out.push((kx, ky, c / n));
        }
    }
    out
}

fn brute_sobolev_sq(f: &ScalarField2D, s: f64) -> f64 {
    let g = *f.grid();
    brute_dft(f).iter().map(|(kx, ky, c)| (1.0 + kx * kx + ky * ky).powf(s) * c.norm_sqr()).sum::<f64>() * g.lx * g.ly
}

fn brute_derivative(f: &ScalarField2D, axis: usize) -> ScalarField2D {
    let g = *f.grid();
    let modes = brute_dft(f);
    ScalarField2D::from_fn(g, |x, y| {
        modes
            .iter()
            .map(|(kx, ky, c)| {
                let k = if axis == 0 { *kx } else { *ky };
                let k = if k.abs() == PI / g.dx() { 0.0 } else { k };
                (c * Complex64::new(0.0, k) * Complex64::from_polar(1.0, kx * x + ky * y)).re
            })
            .sum()
    })
}

fn test_state(g: Grid2D, a: f64, b: f64, c: f64) -> FluidState {
    let hb = eos2().background_h();
    FluidState::new(
        ScalarField2D::from_fn(g, |x, y| hb + a * (x + 2.0 * y).cos()),
        ScalarField2D::from_fn(g, |x, _| b * (2.0 * x).sin()),
        ScalarField2D::from_fn(g, |_, y| c * y.cos()),
    )
    .unwrap()
}

fn report(st: &FluidState, s: f64, sp: f64) -> EnergyReport {
    let w = vorticity_from_jets(&StateJets::from_state(st, &eos2(), 0.0).unwrap()).unwrap();
    total_energy(st, &eos2(), &w, s, sp, 0.0, 0.0).unwrap()
}

fn run(preset: Preset, nx: usize, amp: f64, t: f64) -> Trajectory {
    let g = Grid2D::square(nx).unwrap();
    let s = initial_state(preset, &g, &eos2(), amp, 1).unwrap();
    evolve(&s, t, &eos2(), &EvolveOptions::default(), &mut Silent).unwrap()
}

#[test]
fn exponent_ranges() {
    check_exponents(1.8, 1.8).unwrap();
    check_exponents(1.875, 1.75).unwrap();
    for (s, sp) in [(1.75, 1.75), (1.9, 1.8), (1.8, 1.7), (1.8, 1.85)] {
        assert!(check_exponents(s, sp).is_err(), "{s} {sp}");
    }
    let g = Grid2D::square(16).unwrap();
    let st = background_state(&g, &eos2());
    let w = [ScalarField2D::zeros(g), ScalarField2D::zeros(g), ScalarField2D::zeros(g)];
    assert!(total_energy(&st, &eos2(), &w, 2.0, 1.8, 0.0, 0.0).is_err());
}

#[test]
fn background_energy_vanishes() {
    let g = Grid2D::square(16).unwrap();
    for eos in [eos2(), EquationOfState::new(3.0).unwrap(), EquationOfState::stiff()] {
        let st = background_state(&g, &eos);
        let w = vorticity_from_jets(&StateJets::from_state(&st, &eos, 0.0).unwrap()).unwrap();
        let r = total_energy(&st, &eos, &w, 1.8, 1.8, 0.0, 0.0).unwrap();
        assert!(r.energy <= 1e-14, "{r:?}");
    }
}

#[test]
fn energy_matches_direct_dft() {
    let g = Grid2D::square(16).unwrap();
    let st = test_state(g, 0.02, 0.03, -0.04);
    let (s, sp) = (1.8, 1.8);
    let r = report(&st, s, sp);
    let area = g.lx * g.ly;
    let h_exact = ((1.0f64 + 5.0).powf(s) * 0.02f64.powi(2) / 2.0 * area).sqrt();
    assert!((r.parts.h_hs - h_exact).abs() <= 1e-10 * h_exact);
    let vb = eos2().background_h().exp();
    let v_sq = brute_sobolev_sq(&st.v0().map(|v| v - vb), s) + brute_sobolev_sq(&st.v1, s) + brute_sobolev_sq(&st.v2, s);
    assert!((r.parts.v_hs - v_sq.sqrt()).abs() <= 1e-10 * v_sq.sqrt());
    let w = vorticity_from_jets(&StateJets::from_state(&st, &eos2(), 0.0).unwrap()).unwrap();
    let w_sq: f64 = w.iter().map(|f| brute_sobolev_sq(f, sp - 0.25)).sum();
    assert!(w_sq > 0.0);
    assert!((r.parts.w_hs - w_sq.sqrt()).abs() <= 1e-10 * w_sq.sqrt());
    let grads: Vec<ScalarField2D> = w.iter().flat_map(|f| [brute_derivative(f, 0), brute_derivative(f, 1)]).collect();
    let l8: f64 = (0..g.len())
        .map(|k| grads.iter().map(|d| d.values()[k].powi(2)).sum::<f64>().sqrt().powi(8))
        .sum::<f64>()
        * g.cell_area();
    let l8 = l8.powf(0.125);
    assert!((r.parts.grad_w_l8 - l8).abs() <= 1e-10 * l8);
    let parts = r.parts.h_hs + r.parts.v_hs + r.parts.w_hs + r.parts.grad_w_l8;
    assert!((r.energy - parts).abs() <= 1e-15 * parts);
}

#[test]
fn height_norm_is_homogeneous() {
    let g = Grid2D::square(16).unwrap();
    let a = report(&test_state(g, 0.01, 0.0, 0.0), 1.8, 1.8).parts.h_hs;
    let b = report(&test_state(g, 0.02, 0.0, 0.0), 1.8, 1.8).parts.h_hs;
    assert!((b / a - 2.0).abs() <= 1e-12);
}

#[test]
fn constant_state_has_unit_gronwall_ratio() {
    let traj = constant_trajectory(Grid2D::square(16).unwrap(), 0.4, 0.3, -0.2, 6);
    let reps = energy_series(&traj, &eos2(), 1.8, 1.8).unwrap();
    let gr = gronwall_audit(&traj, &eos2(), &reps, 1.8, 3.0).unwrap();
    assert!(gr.samples.iter().all(|s| (s.k - 1.0).abs() <= 1e-14));
    assert!(!gr.violated);
    assert!(gronwall_audit(&traj, &eos2(), &reps[1..], 1.8, 3.0).is_err());
}

#[test]
fn acoustic_pulse_stays_in_linear_envelope() {
    let g = Grid2D::square(32).unwrap();
    let crossing = g.lx / 0.5f64.sqrt();
    let traj = run(Preset::PlaneAcoustic, 32, 1e-3, crossing);
    let reps = energy_series(&traj, &eos2(), 1.8, 1.8).unwrap();
    let gr = gronwall_audit(&traj, &eos2(), &reps, 1.8, 3.0).unwrap();
    assert!(gr.k_max <= 1.1, "{}", gr.k_max);
    assert!(reps.windows(2).all(|p| p[1].strich_accum >= p[0].strich_accum));
}

#[test]
fn gronwall_constant_is_refinement_stable() {
    let kmax = |nx: usize| {
        let traj = run(Preset::GaussianBump, nx, 0.05, 1.0);
        let reps = energy_series(&traj, &eos2(), 1.8, 1.8).unwrap();
        gronwall_audit(&traj, &eos2(), &reps, 1.8, 3.0).unwrap().k_max
    };
    let (a, b) = (kmax(64), kmax(128));
    assert!((a / b - 1.0).abs() <= 0.1, "{a} vs {b}");
}

#[test]
fn single_mode_table_is_band_limited() {
    let g = Grid2D::square(32).unwrap();
    let hb = eos2().background_h();
    let st = FluidState::new(
        ScalarField2D::from_fn(g, |x, _| hb + 1e-4 * (4.0 * x).cos()),
        ScalarField2D::zeros(g),
        ScalarField2D::zeros(g),
    )
    .unwrap();
    let traj = Trajectory::new(0.0, 0.1, vec![st; 5]).unwrap();
    let table = dyadic_strichartz_table(&traj, &eos2()).unwrap();
    let peak = table.rows.iter().map(|r| r.dv.max(r.dh)).fold(0.0, f64::max);
    assert!(peak > 0.0);
    for r in &table.rows {
        if !(1..=3).contains(&r.j) {
            assert!(r.dv <= 1e-6 * peak && r.dh <= 1e-6 * peak, "{r:?}");
        }
    }
    assert!(table.rows.iter().any(|r| r.j == 2 && r.dh > 0.5 * peak));
}

#[test]
fn gaussian_table_decays_and_obeys_triangle_inequality() {
    let traj = run(Preset::GaussianBump, 64, 0.05, 0.5);
    let table = dyadic_strichartz_table(&traj, &eos2()).unwrap();
    assert!(table.beta_dv.unwrap() > 0.0);
    assert!(table.beta_dh.unwrap() > 0.0);
    let sum_dv: f64 = table.rows.iter().map(|r| r.dv).sum();
    let sum_dh: f64 = table.rows.iter().map(|r| r.dh).sum();
    assert!(table.total_dv <= sum_dv + table.zero_mode_dv + 1e-12);
    assert!(table.total_dh <= sum_dh + table.zero_mode_dh + 1e-12);
    let (lo, hi) = band_range(traj.grid());
    assert_eq!(table.rows.len() as i32, hi - lo + 1);
}

#[test]
fn tail_fit_recovers_exponent() {
    let rows: Vec<(i32, f64)> = (0..6).map(|j| (j, 3.0 * 2f64.powf(-1.5 * j as f64))).collect();
    assert!((fit_tail_exponent(&rows).unwrap() - 1.5).abs() <= 1e-12);
    assert!(fit_tail_exponent(&[(0, 0.0), (1, 0.0)]).is_none());
}

#[test]
fn cascade_ladder_shapes() {
    let g = Grid2D::square(64).unwrap();
    let st = initial_state(Preset::GaussianBump, &g, &eos2(), 0.05, 1).unwrap();
    let (_, hi) = band_range(&g);
    let sched = cascade_prepare(&st, &eos2(), 2.0, 0.005, hi, 1.0, 1.8).unwrap();
    assert!(!sched.clamped);
    for pair in sched.entries.windows(2) {
        let ratio = pair[1].t_star / pair[0].t_star;
        assert!((ratio - 2f64.powf(-0.005)).abs() <= 1e-15);
    }
    assert_eq!(sched.entries[0].t_star, 2.0f64.powi(-3));
    let sat = (64.0f64 / 3.0).log2().ceil() as i32;
    for e in sched.entries.iter().filter(|e| e.j >= sat) {
        assert!((&e.state.h - &st.h).max_abs() <= 1e-12, "j = {}", e.j);
    }
    let hdot = homogeneous_sobolev_norm(&st.h, 1.8).unwrap();
    assert!(sched.bernstein_sup() <= hdot, "{} vs {hdot}", sched.bernstein_sup());
    assert!(sched.bernstein_sup() > 0.0);
    assert!(sched.entries.last().unwrap().increment_l2.is_none());
}

#[test]
fn cascade_increment_matches_direct_dft() {
    let g = Grid2D::square(16).unwrap();
    let st = initial_state(Preset::GaussianBump, &g, &eos2(), 0.05, 1).unwrap();
    let sched = cascade_prepare(&st, &eos2(), 1.0, 0.005, 3, 1.0, 1.8).unwrap();
    let modes = brute_dft(&st.h);
    for e in sched.entries.iter().filter(|e| e.increment_l2.is_some()) {
        let s = 2f64.powi(-e.j);
        let sq: f64 = modes
            .iter()
            .map(|(kx, ky, c)| {
                let r = kx.hypot(*ky);
                (psi(s * r / 2.0) - psi(s * r)).powi(2) * c.norm_sqr()
            })
            .sum::<f64>()
            * g.lx
            * g.ly;
        let d = e.increment_l2.unwrap();
        assert!((d - sq.sqrt()).abs() <= 1e-10 * (1.0 + sq.sqrt()), "{d} vs {}", sq.sqrt());
    }
}

#[test]
fn cascade_support_is_monotone() {
    let g = Grid2D::square(32).unwrap();
    let st = initial_state(Preset::RandomSmooth, &g, &eos2(), 0.05, 3).unwrap();
    let sched = cascade_prepare(&st, &eos2(), 1.0, 0.005, 6, 1.0, 1.8).unwrap();
    let support = |f: &ScalarField2D| -> Vec<bool> {
        let sp = f.spectrum();
        (0..g.ny).flat_map(|j| (0..g.nx).map(move |i| (i, j))).map(|(i, j)| sp.coeff(i, j).norm() > 1e-13).collect()
    };
    for pair in sched.entries.windows(2) {
        let (a, b) = (support(&pair[0].state.h), support(&pair[1].state.h));
        assert!(a.iter().zip(&b).all(|(x, y)| !x || *y), "j = {}", pair[0].j);
    }
}

#[test]
fn cascade_rejections_and_clamping() {
    let g = Grid2D::square(16).unwrap();
    let st = background_state(&g, &eos2());
    assert!(cascade_prepare(&st, &eos2(), 1.0, 0.006, 3, 1.0, 1.8).is_err());
    assert!(cascade_prepare(&st, &eos2(), 1.0, 0.0, 3, 1.0, 1.8).is_err());
    assert!(cascade_prepare(&st, &eos2(), 1.0, 0.012, 3, 1.0, 1.875).is_ok());
    assert!(cascade_prepare(&st, &eos2(), 0.0, 0.005, 3, 1.0, 1.8).is_err());
    assert!(cascade_prepare(&st, &eos2(), 1.0, 0.005, 3, -1.0, 1.8).is_err());
    let (_, hi) = band_range(&g);
    let sched = cascade_prepare(&st, &eos2(), 1.0, 0.005, 40, 1.0, 1.8).unwrap();
    assert!(sched.clamped);
    assert_eq!(sched.jmax, hi);
    assert_eq!(sched.jmax_requested, 40);
}

#[test]
fn cascade_differences_cover_adjacent_levels() {
    let g = Grid2D::square(32).unwrap();
    let st = initial_state(Preset::GaussianBump, &g, &eos2(), 0.05, 1).unwrap();
    let sched = cascade_prepare(&st, &eos2(), 1.0, 0.005, 4, 1.0, 1.8).unwrap();
    let diffs = cascade_differences(&sched, &eos2(), cfl_dt(&g, 0.4), 4, &EvolveOptions::default()).unwrap();
    assert_eq!(diffs.len(), sched.entries.len() - 1);
    assert!(diffs.iter().all(|d| d.diff_l2.is_finite() && d.diff_l2 >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_parts_are_homogeneous(a in 0.001f64..0.05, b in -0.05f64..0.05, c in -0.05f64..0.05, lam in 0.2f64..3.0) {
        let g = Grid2D::square(16).unwrap();
        let r1 = report(&test_state(g, a, b, c), 1.8, 1.8);
        let r2 = report(&test_state(g, lam * a, b, c), 1.8, 1.8);
        prop_assert!((r2.parts.h_hs - lam * r1.parts.h_hs).abs() <= 1e-12 * r2.parts.h_hs);
        for p in [r1.parts.h_hs, r1.parts.v_hs, r1.parts.w_hs, r1.parts.grad_w_l8] {
            prop_assert!(p >= 0.0);
        }
    }
}
