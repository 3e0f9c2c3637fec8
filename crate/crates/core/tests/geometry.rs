//! Null foliations, null frames, connection coefficients and the foliation norm.

use proptest::prelude::*;
use releuler::field::Grid2D;
use releuler::geometry::*;
use releuler::hyperbolic::{cfl_dt, evolve_steps, EvolveOptions, Silent, Trajectory};
use releuler::scenario::{background_state, initial_state, Preset};
use releuler::thermo::{lift_point, EquationOfState, FluidState};

fn directions() -> Vec<Direction> {
    [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)].into_iter().map(|(a, s)| Direction::new(a, s).unwrap()).collect()
}

fn run(preset: Preset, eos: &EquationOfState, nx: usize, amp: f64, steps: usize) -> Trajectory {
    let g = Grid2D::square(nx).unwrap();
    let s = initial_state(preset, &g, eos, amp, 1).unwrap();
    evolve_steps(&s, cfl_dt(&g, 0.4), steps, eos, &EvolveOptions::default(), &mut Silent).unwrap()
}

fn background_run(eos: &EquationOfState, nx: usize, steps: usize) -> Trajectory {
    let g = Grid2D::square(nx).unwrap();
    evolve_steps(&background_state(&g, eos), cfl_dt(&g, 0.4), steps, eos, &EvolveOptions::default(), &mut Silent).unwrap()
}

/// Plane speed along `+e_2` for a constant state from `c_s² m(ξ,ξ) + (c_s²−1)(u·ξ)² = 0`, `ξ = (−s, 0, 1)`.
fn frozen_plane_speed(eos: &EquationOfState, h: f64, v1: f64, v2: f64) -> f64 {
    let c2 = eos.cs2(h);
    let e = (-h).exp();
    let (u0, u2) = (e * lift_point(h, v1, v2), e * v2);
    let d = c2 - 1.0;
    let a = -c2 + d * u0 * u0;
    let b = -2.0 * d * u0 * u2;
    let c = c2 + d * u2 * u2;
    let disc = (b * b - 4.0 * a * c).sqrt();
    let roots = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)];
    roots[0].max(roots[1])
}

#[test]
fn minkowski_leaves_are_unit_speed_planes() {
    let eos = EquationOfState::stiff();
    let traj = background_run(&eos, 16, 8);
    for dir in directions() {
        let fol = evolve_foliation(&traj, &eos, dir, 1.5, 0).unwrap();
        assert_eq!(fol.samples.len(), 5);
        for s in &fol.samples {
            for i in 0..s.phi.len() {
                assert!((s.phi[i] - 1.5 - s.time).abs() <= 1e-12);
                assert!((s.phi_t[i] - 1.0).abs() <= 1e-14);
                assert!(s.phi_1[i].abs() <= 1e-14);
            }
        }
        assert!(fol.null_defect <= 1e-14);
    }
}

#[test]
fn background_leaves_move_at_sound_speed() {
    let eos = EquationOfState::new(2.0).unwrap();
    let traj = background_run(&eos, 16, 8);
    let c = 0.5f64.sqrt();
    for dir in directions() {
        let fol = evolve_foliation(&traj, &eos, dir, 2.0, 0).unwrap();
        for s in &fol.samples {
            assert!(s.phi_t.iter().all(|&v| (v - c).abs() <= 1e-6));
            assert!(s.phi.iter().all(|&p| (p - 2.0 - c * s.time).abs() <= 1e-6));
        }
    }
}

#[test]
fn minkowski_frame_is_exact() {
    let eos = EquationOfState::stiff();
    let traj = background_run(&eos, 16, 8);
    let dir = Direction::new(1, 1.0).unwrap();
    let fol = evolve_foliation(&traj, &eos, dir, 1.0, 0).unwrap();
    let frame = build_null_frame(&traj, &eos, &fol).unwrap();
    for s in &frame.samples {
        for i in 0..s.l.len() {
            assert_eq!(s.l[i], [1.0, 0.0, 1.0]);
            assert_eq!(s.lbar[i], [-1.0, 0.0, 1.0]);
            assert_eq!(s.e1[i], [0.0, 1.0, 0.0]);
            assert_eq!(s.sigma[i], 1.0);
        }
    }
    assert_eq!(frame.gram_defect(), 0.0);
    assert_eq!(frame.flat_deviation(), 0.0);
    let chi = connection_chi(&traj, &eos, &fol, &frame).unwrap();
    assert!(!chi.chi.is_empty());
    assert!(chi.chi_sup() <= 1e-14);
    let norms = foliation_norms(&fol, traj.grid(), 1.0, 1.8).unwrap();
    assert!(norms.value <= 1e-14);
}

#[test]
fn null_and_gram_contracts_on_evolved_runs() {
    let eos = EquationOfState::new(2.0).unwrap();
    for preset in [Preset::Vortex, Preset::GaussianBump, Preset::RandomSmooth] {
        let traj = run(preset, &eos, 32, preset.default_amplitude(), 12);
        for dir in directions() {
            let fol = evolve_foliation(&traj, &eos, dir, 2.0, 0).unwrap();
            assert!(fol.null_defect <= 1e-8, "{preset:?} {}", fol.null_defect);
            let frame = build_null_frame(&traj, &eos, &fol).unwrap();
            assert!(frame.gram_defect() <= 1e-8, "{preset:?} {}", frame.gram_defect());
            for s in &frame.samples {
                assert!(s.l.iter().all(|l| l[0] == 1.0));
                assert!(s.sigma.iter().all(|&x| x > 0.0));
            }
        }
    }
}

#[test]
fn frame_deviation_scales_with_amplitude() {
    let eos = EquationOfState::new(2.0).unwrap();
    let dir = Direction::new(1, 1.0).unwrap();
    let frame = |amp: f64| {
        let traj = run(Preset::Vortex, &eos, 32, amp, 8);
        let fol = evolve_foliation(&traj, &eos, dir, 1.0, 0).unwrap();
        build_null_frame(&traj, &eos, &fol).unwrap()
    };
    let base = frame(0.0);
    let norm = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
    let dev = |amp: f64| {
        let f = frame(amp);
        let mut worst: f64 = 0.0;
        for (s, b) in f.samples.iter().zip(&base.samples) {
            for i in 0..s.l.len() {
                worst = worst.max(norm(&s.e1[i], &b.e1[i]) + norm(&s.l[i], &b.l[i]));
            }
        }
        worst
    };
    let ratio = dev(1e-2) / dev(1e-3);
    assert!((ratio - 10.0).abs() <= 0.5, "ratio {ratio}");
}

#[test]
fn stiff_frame_ignores_amplitude() {
    let eos = EquationOfState::stiff();
    let traj = run(Preset::StiffVortex, &eos, 32, 0.1, 8);
    let fol = evolve_foliation(&traj, &eos, Direction::new(1, 1.0).unwrap(), 1.0, 0).unwrap();
    assert_eq!(build_null_frame(&traj, &eos, &fol).unwrap().flat_deviation(), 0.0);
}

#[test]
fn chi_is_linear_in_small_amplitude() {
    let eos = EquationOfState::new(2.0).unwrap();
    let dir = Direction::new(0, 1.0).unwrap();
    let chi = |amp: f64| {
        let traj = run(Preset::GaussianBump, &eos, 32, amp, 12);
        let fol = evolve_foliation(&traj, &eos, dir, 3.0, 0).unwrap();
        let frame = build_null_frame(&traj, &eos, &fol).unwrap();
        connection_chi(&traj, &eos, &fol, &frame).unwrap().chi_sup()
    };
    let (a, b) = (chi(1e-3), chi(2e-3));
    assert!(a > 0.0 && a <= 1e-1);
    assert!((b / a - 2.0).abs() <= 0.02, "ratio {}", b / a);
}

#[test]
fn transport_audit_self_converges() {
    let eos = EquationOfState::new(2.0).unwrap();
    let dir = Direction::new(1, 1.0).unwrap();
    let audit = |nx: usize, m: usize| {
        let traj = run(Preset::Vortex, &eos, nx, 0.05, 24 * m);
        let fol = evolve_foliation(&traj, &eos, dir, 2.0, 0).unwrap();
        let frame = build_null_frame(&traj, &eos, &fol).unwrap();
        let rep = connection_chi(&traj, &eos, &fol, &frame).unwrap();
        rep.audit.iter().find(|r| r.slice == 12 * m).cloned().unwrap()
    };
    let coarse = audit(32, 1);
    let fine = audit(64, 2);
    assert!((coarse.time - fine.time).abs() <= 1e-12);
    assert!(fine.residual_sup <= 1e-2 * fine.scale, "{fine:?}");
    assert!(coarse.residual_sup / fine.residual_sup >= 4.0, "{:e} → {:e}", coarse.residual_sup, fine.residual_sup);
}

#[test]
fn foliation_norm_scaling_and_refinement() {
    let eos = EquationOfState::new(2.0).unwrap();
    let dir = Direction::new(0, 1.0).unwrap();
    let norm = |nx: usize, m: usize, amp: f64, s0: f64| {
        let traj = run(Preset::GaussianBump, &eos, nx, amp, 16 * m);
        let fol = evolve_foliation(&traj, &eos, dir, 3.0, 0).unwrap();
        let c = reference_speed(&traj.states[0], &eos);
        foliation_norms(&fol, traj.grid(), c, s0).unwrap().value
    };
    for s0 in [1.8, 1.85] {
        let ratio = norm(32, 1, 2e-3, s0) / norm(32, 1, 1e-3, s0);
        assert!((ratio - 2.0).abs() <= 0.1, "ratio {ratio}");
        let (a, b) = (norm(32, 1, 0.05, s0), norm(64, 2, 0.05, s0));
        assert!(a.is_finite() && b > 0.0);
        assert!((a / b - 1.0).abs() <= 0.1, "{a} vs {b}");
    }
}

#[test]
fn leaves_with_increasing_level_never_cross() {
    let eos = EquationOfState::new(2.0).unwrap();
    let traj = run(Preset::Vortex, &eos, 32, 0.05, 8);
    let dir = Direction::new(1, -1.0).unwrap();
    let mut leaves: Vec<NullFoliation> = [1.0, 2.0, 3.0].iter().map(|&r| evolve_foliation(&traj, &eos, dir, r, 0).unwrap()).collect();
    check_ordering(&leaves).unwrap();
    let swapped = leaves[0].samples[2].phi.clone();
    leaves[0].samples[2].phi = leaves[2].samples[2].phi.clone();
    leaves[2].samples[2].phi = swapped;
    assert!(check_ordering(&leaves).is_err());
}

#[test]
fn foliation_summary_rows() {
    let eos = EquationOfState::stiff();
    let traj = background_run(&eos, 16, 8);
    let fol = evolve_foliation(&traj, &eos, Direction::new(0, 1.0).unwrap(), 1.0, 0).unwrap();
    let rows = foliation_summary(&fol, None);
    assert_eq!(rows.len(), fol.samples.len());
    assert!(rows.iter().all(|r| r.max_phi_t_minus_1.abs() <= 1e-14 && r.chi_sup.is_none()));
}

#[test]
fn invalid_directions_and_slabs_are_rejected() {
    assert!(Direction::new(2, 1.0).is_err());
    assert!(Direction::new(0, 0.5).is_err());
    assert!(Direction::from_vector([0.6, 0.8]).is_err());
    assert_eq!(Direction::from_vector([0.0, -1.0]).unwrap(), Direction::new(1, -1.0).unwrap());
    let eos = EquationOfState::new(2.0).unwrap();
    let traj = background_run(&eos, 16, 1);
    assert!(evolve_foliation(&traj, &eos, Direction::new(0, 1.0).unwrap(), 1.0, 0).is_err());
    let short = background_run(&eos, 16, 4);
    let fol = evolve_foliation(&short, &eos, Direction::new(0, 1.0).unwrap(), 1.0, 0).unwrap();
    assert!(foliation_norms(&fol, short.grid(), 0.5f64.sqrt(), 1.8).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_state_leaves_move_at_frozen_speed(h in 0.1f64..0.75, v1 in -2.0f64..2.0, v2 in -2.0f64..2.0) {
        let eos = EquationOfState::new(2.0).unwrap();
        let g = Grid2D::square(16).unwrap();
        let states = vec![FluidState::constant(g, h, v1, v2); 5];
        let traj = Trajectory::new(0.0, 0.1, states).unwrap();
        let fol = evolve_foliation(&traj, &eos, Direction::new(1, 1.0).unwrap(), 1.0, 0).unwrap();
        let speed = frozen_plane_speed(&eos, h, v1, v2);
        for s in &fol.samples {
            for &p in &s.phi_t {
                prop_assert!((p - speed).abs() <= 1e-10 * (1.0 + speed.abs()));
            }
        }
        let frame = build_null_frame(&traj, &eos, &fol).unwrap();
        prop_assert!(frame.gram_defect() <= 1e-8);
    }
}
