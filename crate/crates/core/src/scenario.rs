//! Initial-data presets.

use crate::error::{Error, Result};
use crate::field::{Grid2D, ScalarField2D};
use crate::thermo::{EquationOfState, FluidState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Name of the seeded generator used for random presets.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha)";

const BUMP_CONCENTRATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preset {
    GaussianBump,
    Vortex,
    StiffIrrotational,
    StiffVortex,
    PlaneAcoustic,
    RandomSmooth,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::GaussianBump,
        Preset::Vortex,
        Preset::StiffIrrotational,
        Preset::StiffVortex,
        Preset::PlaneAcoustic,
        Preset::RandomSmooth,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::GaussianBump => "gaussian-bump",
            Preset::Vortex => "vortex",
            Preset::StiffIrrotational => "stiff-irrotational",
            Preset::StiffVortex => "stiff-vortex",
            Preset::PlaneAcoustic => "plane-acoustic",
            Preset::RandomSmooth => "random-smooth",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Presets that fix `A = 1`.
    pub fn requires_stiff(&self) -> bool {
        matches!(self, Preset::StiffIrrotational | Preset::StiffVortex)
    }

    pub fn default_amplitude(&self) -> f64 {
        match self {
            Preset::PlaneAcoustic => 1e-6,
            _ => 0.05,
        }
    }

    /// Whether the data carry vorticity.
    pub fn rotational(&self) -> bool {
        matches!(self, Preset::Vortex | Preset::StiffVortex | Preset::RandomSmooth)
    }
}

/// Periodic bump `exp(κ(cos(x1−c1) − 1) + κ(cos(x2−c2) − 1))` and its gradient.
fn bump(grid: &Grid2D, c: (f64, f64)) -> [ScalarField2D; 3] {
    let (sx, sy) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
    let k = BUMP_CONCENTRATION;
    let f = move |x: f64, y: f64| (k * ((sx * (x - c.0)).cos() - 1.0) + k * ((sy * (y - c.1)).cos() - 1.0)).exp();
    [
        ScalarField2D::from_fn(*grid, f),
        ScalarField2D::from_fn(*grid, move |x, y| -k * sx * (sx * (x - c.0)).sin() * f(x, y)),
        ScalarField2D::from_fn(*grid, move |x, y| -k * sy * (sy * (y - c.1)).sin() * f(x, y)),
    ]
}

/// Uniform state at rest at the background enthalpy.
pub fn background_state(grid: &Grid2D, eos: &EquationOfState) -> FluidState {
    let h = eos.background_h();
    FluidState::constant(*grid, h, 0.0, 0.0)
}

fn random_field(grid: &Grid2D, rng: &mut ChaCha20Rng, modes: i32) -> ScalarField2D {
    let mut f = ScalarField2D::zeros(*grid);
    let (sx, sy) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
    for mx in -modes..=modes {
        for my in 0..=modes {
            if my == 0 && mx <= 0 {
                continue;
            }
            let a: f64 = rng.random_range(-1.0..1.0);
            let ph: f64 = rng.random_range(0.0..2.0 * PI);
            let decay = 1.0 / (1.0 + (mx * mx + my * my) as f64);
            let term = ScalarField2D::from_fn(*grid, |x, y| {
                (sx * mx as f64 * x + sy * my as f64 * y + ph).cos()
            });
            f.axpy(a * decay, &term);
        }
    }
    let m = f.max_abs();
    if m > 0.0 {
        f = &f * (1.0 / m);
    }
    f
}

/// Builds the preset's initial state and checks admissibility.
pub fn initial_state(
    preset: Preset,
    grid: &Grid2D,
    eos: &EquationOfState,
    amplitude: f64,
    seed: u64,
) -> Result<FluidState> {
    if preset.requires_stiff() && !eos.is_stiff() {
        return Err(Error::OutOfRange {
            what: "A".into(),
            detail: format!("preset {} requires A = 1", preset.name()),
        });
    }
    if !amplitude.is_finite() {
        return Err(Error::OutOfRange {
            what: "amplitude".into(),
            detail: format!("{amplitude}"),
        });
    }
    let hb = eos.background_h();
    let eh = hb.exp();
    let centre = (grid.lx / 2.0, grid.ly / 2.0);
    let off = (grid.lx * 0.35, grid.ly * 0.6);
    let zero = ScalarField2D::zeros(*grid);
    let (h, v1, v2) = match preset {
        Preset::GaussianBump => {
            let [b, _, _] = bump(grid, centre);
            (b.map(|x| hb + amplitude * x), zero.clone(), zero)
        }
        Preset::Vortex => {
            let [_, bx, by] = bump(grid, centre);
            (
                ScalarField2D::constant(*grid, hb),
                &by * (amplitude * eh),
                &bx * (-amplitude * eh),
            )
        }
        Preset::StiffIrrotational => {
            let [b, _, _] = bump(grid, centre);
            let [_, gx, gy] = bump(grid, off);
            (&b * amplitude, &gx * (0.5 * amplitude), &gy * (0.5 * amplitude))
        }
        Preset::StiffVortex => {
            let [b, _, _] = bump(grid, centre);
            let [_, bx, by] = bump(grid, off);
            (&b * (0.5 * amplitude), &by * amplitude, &bx * (-amplitude))
        }
        Preset::PlaneAcoustic => {
            let c = eos.cs(hb);
            let k = 2.0 * PI / grid.lx;
            let wave = ScalarField2D::from_fn(*grid, |x, _| (k * x).cos());
            (wave.map(|w| hb + amplitude * w), &wave * (eh * amplitude / c), zero)
        }
        Preset::RandomSmooth => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let h = random_field(grid, &mut rng, 3);
            let v1 = random_field(grid, &mut rng, 3);
            let v2 = random_field(grid, &mut rng, 3);
            (h.map(|x| hb + amplitude * x), &v1 * (amplitude * eh), &v2 * (amplitude * eh))
        }
    };
    let state = FluidState::new(h, v1, v2)?;
    state.check_admissible(eos)?;
    let floor = state.h.values().iter().fold(f64::INFINITY, |m, &h| m.min((2.0 * h).exp()));
    if floor < 0.1 {
        return Err(Error::Inadmissible(format!(
            "amplitude {amplitude} drives e^(2h) down to {floor} < 0.1"
        )));
    }
    Ok(state)
}
