//! Scenario presets.

use releuler::field::{Axis, Grid2D};
use releuler::scenario::*;
use releuler::thermo::EquationOfState;

fn eos_for(p: Preset) -> EquationOfState {
    if p.requires_stiff() {
        EquationOfState::stiff()
    } else {
        EquationOfState::new(2.0).unwrap()
    }
}

#[test]
fn names_round_trip() {
    for p in Preset::ALL {
        assert_eq!(Preset::from_name(p.name()), Some(p));
    }
    assert_eq!(Preset::from_name("gaussian-bump"), Some(Preset::GaussianBump));
    assert!(Preset::from_name("bump").is_none());
    assert_eq!(Preset::PlaneAcoustic.default_amplitude(), 1e-6);
}

#[test]
fn presets_are_admissible_and_constrained() {
    let g = Grid2D::square(32).unwrap();
    for p in Preset::ALL {
        let eos = eos_for(p);
        let s = initial_state(p, &g, &eos, p.default_amplitude(), 1).unwrap();
        assert!(s.constraint_defect() <= 1e-14, "{p:?}");
        s.check_admissible(&eos).unwrap();
    }
}

#[test]
fn stiff_presets_require_unit_exponent() {
    let g = Grid2D::square(16).unwrap();
    let eos = EquationOfState::new(2.0).unwrap();
    assert!(initial_state(Preset::StiffVortex, &g, &eos, 0.05, 1).is_err());
    assert!(initial_state(Preset::StiffIrrotational, &g, &eos, 0.05, 1).is_err());
    assert!(initial_state(Preset::Vortex, &g, &EquationOfState::stiff(), 0.05, 1).is_ok());
    assert!(initial_state(Preset::GaussianBump, &g, &eos, f64::NAN, 1).is_err());
}

#[test]
fn large_amplitude_is_rejected() {
    let g = Grid2D::square(16).unwrap();
    let eos = EquationOfState::new(2.0).unwrap();
    assert!(initial_state(Preset::GaussianBump, &g, &eos, -5.0, 1).is_err());
}

#[test]
fn vortex_velocity_is_divergence_free() {
    let g = Grid2D::square(128).unwrap();
    let eos = EquationOfState::new(2.0).unwrap();
    let s = initial_state(Preset::Vortex, &g, &eos, 0.05, 1).unwrap();
    let div = &s.v1.derivative(Axis::X1).unwrap() + &s.v2.derivative(Axis::X2).unwrap();
    assert!(div.max_abs() <= 1e-12, "{:e}", div.max_abs());
    let curl = &s.v2.derivative(Axis::X1).unwrap() - &s.v1.derivative(Axis::X2).unwrap();
    assert!(curl.max_abs() > 1e-3);
}

#[test]
fn random_preset_is_seed_deterministic() {
    let g = Grid2D::square(16).unwrap();
    let eos = EquationOfState::new(2.0).unwrap();
    let a = initial_state(Preset::RandomSmooth, &g, &eos, 0.05, 9).unwrap();
    let b = initial_state(Preset::RandomSmooth, &g, &eos, 0.05, 9).unwrap();
    let c = initial_state(Preset::RandomSmooth, &g, &eos, 0.05, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn background_is_at_rest_with_half_sound_speed() {
    let g = Grid2D::square(16).unwrap();
    let eos = EquationOfState::new(3.0).unwrap();
    let s = background_state(&g, &eos);
    assert!((eos.cs2(s.h.mean()) - 0.5).abs() <= 1e-15);
    assert_eq!(s.v1.max_abs(), 0.0);
}
