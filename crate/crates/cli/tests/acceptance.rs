//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use releuler::diagnostics::{cascade_prepare, energy_series, gronwall_audit};
use releuler::elliptic::{curl_w_rhs, minors_point, p_matrix_point, solve_periodic, solve_vminus, SlabCoefficients, SlabField, SolveOptions};
use releuler::field::{band_range, homogeneous_sobolev_norm, Grid2D};
use releuler::geometry::{build_null_frame, evolve_foliation, Direction};
use releuler::hyperbolic::{cfl_dt, evolve, evolve_steps, EvolveOptions, Silent, Trajectory};
use releuler::jet::StateJets;
use releuler::scenario::{background_state, initial_state, Preset};
use releuler::thermo::{acoustic_metric, normalized_velocity, EquationOfState, FluidState, Sym3};
use releuler::vorticity::{hodge_identity_checks, l2_norm3, vorticity_divergence, vorticity_from_jets, EpsilonConvention, LeviCivita};
use releuler::wave::{observed_order, stiff_checks, wave_residuals};
use releuler_cli::checks::{PairResiduals, RefinementPair};
use releuler_cli::config::parse_config;
use std::f64::consts::PI;
use std::time::Instant;

type Verdict = (bool, String);

fn eos_for(p: Preset) -> EquationOfState {
    if p.requires_stiff() {
        EquationOfState::stiff()
    } else {
        EquationOfState::new(2.0).unwrap()
    }
}

fn directions() -> [Direction; 4] {
    [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)].map(|(a, s)| Direction::new(a, s).unwrap())
}

/// Every preset at the default configuration: nx = 128, T = 1, default amplitude.
fn default_runs() -> Vec<(Preset, EquationOfState, Trajectory)> {
    Preset::ALL
        .into_iter()
        .map(|p| {
            let eos = eos_for(p);
            let g = Grid2D::square(128).unwrap();
            let s = initial_state(p, &g, &eos, p.default_amplitude(), 0).unwrap();
            let traj = evolve(&s, 1.0, &eos, &EvolveOptions::default(), &mut Silent).unwrap();
            (p, eos, traj)
        })
        .collect()
}

fn pair(scenario: &str) -> (EquationOfState, RefinementPair) {
    let config = parse_config(Some(&format!("scenario = \"{scenario}\"")), &[]).unwrap();
    let eos = EquationOfState::new(config.a).unwrap();
    let pair = RefinementPair::build(&config, &eos).unwrap();
    (eos, pair)
}

fn ellipticity() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut p1, mut p2, mut p3) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for _ in 0..1000 {
        let h = rng.random_range(-1.0..=1.0);
        let r = rng.random_range(0.0f64..=5.0);
        let phi = rng.random_range(0.0..2.0 * PI);
        let m = minors_point(h, r * phi.cos(), r * phi.sin());
        p1 = p1.min(m[0]);
        p2 = p2.min(m[1]);
        p3 = p3.max((m[2] - 1.0).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    (
        p1 >= 1.0 && p2 >= 1.0 && p3 <= 1e-12 && secs < 1.0,
        format!("min p1 {p1:.6}, min p2 {p2:.6}, max |p3 − 1| {p3:.1e}, {secs:.3} s"),
    )
}

fn constraint(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let worst = runs.iter().flat_map(|r| r.2.states.iter()).map(|s| s.constraint_defect()).fold(0.0, f64::max);
    let slices: usize = runs.iter().map(|r| r.2.len()).sum();
    (worst <= 1e-14, format!("max defect {worst:.1e} over {slices} slices of {} presets", runs.len()))
}

fn divergence(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let traj = &runs.iter().find(|r| r.0 == Preset::Vortex).unwrap().2;
    let mut worst: f64 = 0.0;
    for n in 2..traj.len() - 2 {
        let jets = StateJets::at(traj, n, 2).unwrap();
        let ratio = vorticity_divergence(&jets).unwrap().l2_norm() / l2_norm3(&vorticity_from_jets(&jets).unwrap());
        worst = worst.max(ratio);
    }
    (worst <= 1e-8, format!("max ‖div w‖/‖w‖ {worst:.1e} over interior slices at nx = 128"))
}

fn wave_transport() -> Verdict {
    let t = Instant::now();
    let (eos, pair) = pair("gaussian-bump");
    let res = PairResiduals::compute(&pair, &eos, false).unwrap();
    let [a, b] = &res.norms;
    let (oh, ov) = (observed_order(a.res_h, b.res_h), observed_order(a.res_v, b.res_v));
    let secs = t.elapsed().as_secs_f64();
    (
        oh >= 3.0 && ov >= 3.0 && secs < 300.0,
        format!("h {:.2e} → {:.2e} (order {oh:.2}), v {:.2e} → {:.2e} (order {ov:.2}), nx 64/128, {secs:.1} s", a.res_h, b.res_h, a.res_v, b.res_v),
    )
}

fn vplus() -> Verdict {
    let (eos, pair) = pair("vortex");
    let res = PairResiduals::compute(&pair, &eos, true).unwrap();
    let [a, b] = &res.norms;
    let (c, f) = (a.res_vplus.unwrap(), b.res_vplus.unwrap());
    let order = observed_order(c, f);
    let solver = res.solver_residual.unwrap();
    let solver = solver[0].max(solver[1]);
    (
        order >= 3.0 && solver <= 1e-9,
        format!("v₊ {c:.2e} → {f:.2e} (order {order:.2}), max relative solve residual {solver:.1e}"),
    )
}

fn stiff_identity(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let eos = EquationOfState::stiff();
    let (mut d, mut q): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    for preset in [Preset::StiffIrrotational, Preset::StiffVortex] {
        for nx in [16, 32, 64] {
            let g = Grid2D::square(nx).unwrap();
            let s = initial_state(preset, &g, &eos, 0.05, 0).unwrap();
            let traj = evolve_steps(&s, cfl_dt(&g, 0.4), 8, &eos, &EvolveOptions::default(), &mut Silent).unwrap();
            let rep = stiff_checks(&traj, 4, &eos).unwrap();
            d = d.max(rep.d_identity_max);
            q = q.max(rep.q_max);
            count += 1;
        }
    }
    for (_, _, traj) in runs.iter().filter(|r| r.0.requires_stiff()) {
        for n in (2..traj.len() - 2).step_by(8) {
            let rep = stiff_checks(traj, n, &eos).unwrap();
            d = d.max(rep.d_identity_max);
            q = q.max(rep.q_max);
            count += 1;
        }
    }
    (d <= 1e-10 && q <= 1e-12, format!("max |D − D₃| {d:.1e}, max |Q| {q:.1e} over {count} slices at nx 16 to 128"))
}

fn stiff_metric(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let eos = EquationOfState::stiff();
    let mut states: Vec<&FluidState> = runs.iter().filter(|r| r.0.requires_stiff()).flat_map(|r| r.2.states.iter()).collect();
    let g = Grid2D::square(16).unwrap();
    let extra = initial_state(Preset::RandomSmooth, &g, &eos, 0.2, 3).unwrap();
    states.push(&extra);
    let exact = states.iter().all(|s| {
        let m = acoustic_metric(s, &eos).unwrap();
        m.ginv.iter().chain(&m.gcov).all(|x| *x == Sym3::MINKOWSKI) && m.theta.values().iter().all(|&t| t == 1.0)
    });
    (exact, format!("g^αβ, g_αβ and Θ compared entrywise on {} stiff slices", states.len()))
}

fn elliptic_oracle() -> Verdict {
    let g = Grid2D::square(16).unwrap();
    let (nt, dt) = (24, 0.1);
    let period = nt as f64 * dt;
    let mut worst: f64 = 0.0;
    for (h, v1, v2) in [(0.3, 0.4, -0.2), (0.0, 2.0, 1.0), (-0.5, -3.0, 0.5)] {
        let p = p_matrix_point(&normalized_velocity(h, v1, v2));
        let coeffs = SlabCoefficients::constant(g, nt, dt, p);
        for (m, k1, k2) in [(1.0, 1.0, 0.0), (2.0, -1.0, 3.0), (0.0, 2.0, 2.0), (3.0, 0.0, -1.0)] {
            let tau = 2.0 * PI * m / period;
            let zeta = [tau, k1, k2];
            let symbol = 1.0 + p.form(&zeta, &zeta);
            let rhs = SlabField::from_fn(g, nt, dt, 0.0, |t, x, y| (tau * t + k1 * x + k2 * y).sin());
            let (sol, _) = solve_periodic(&coeffs, &rhs, &SolveOptions::default()).unwrap();
            let expected = rhs.scaled(1.0 / symbol);
            let err = sol.data.iter().zip(&expected.data).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(err / expected.norm());
        }
    }
    (worst <= 1e-9, format!("max relative error against 1/(1 + P(ζ,ζ)) {worst:.1e} over 12 modes"))
}

fn null_frame(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let (mut gram, mut null): (f64, f64) = (0.0, 0.0);
    let mut leaves = 0;
    for (_, eos, traj) in runs {
        for dir in directions() {
            let fol = evolve_foliation(traj, eos, dir, 2.0, 0).unwrap();
            null = null.max(fol.null_defect);
            gram = gram.max(build_null_frame(traj, eos, &fol).unwrap().gram_defect());
            leaves += 1;
        }
    }
    let g = Grid2D::square(16).unwrap();
    let speed_err = |eos: &EquationOfState, c: f64| {
        let traj = evolve_steps(&background_state(&g, eos), cfl_dt(&g, 0.4), 8, eos, &EvolveOptions::default(), &mut Silent).unwrap();
        let mut worst: f64 = 0.0;
        for dir in directions() {
            let fol = evolve_foliation(&traj, eos, dir, 1.0, 0).unwrap();
            for s in &fol.samples {
                for (p, pt) in s.phi.iter().zip(&s.phi_t) {
                    worst = worst.max((pt - c).abs()).max((p - 1.0 - c * s.time).abs());
                }
            }
        }
        worst
    };
    let flat = speed_err(&EquationOfState::stiff(), 1.0);
    let sound = speed_err(&EquationOfState::new(2.0).unwrap(), 0.5f64.sqrt());
    (
        gram <= 1e-8 && null <= 1e-8 && flat <= 1e-12 && sound <= 1e-6,
        format!("Gram {gram:.1e}, null {null:.1e} over {leaves} leaves; Minkowski speed error {flat:.1e}; 1/√2 speed error {sound:.1e}"),
    )
}

fn gronwall(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let mut worst = (0.0f64, "");
    let mut ok = true;
    for (p, eos, traj) in runs {
        let reps = energy_series(traj, eos, 1.8, 1.8).unwrap();
        let rep = gronwall_audit(traj, eos, &reps, 1.8, 3.0).unwrap();
        ok &= rep.k_max <= 3.0 * rep.samples[0].k;
        if rep.k_max > worst.0 {
            worst = (rep.k_max, p.name());
        }
    }
    (ok, format!("max K {:.4} ({}) against 3·K(0) = 3", worst.0, worst.1))
}

fn cascade() -> Verdict {
    let eos = EquationOfState::new(2.0).unwrap();
    let g = Grid2D::square(128).unwrap();
    let s = initial_state(Preset::GaussianBump, &g, &eos, 0.05, 0).unwrap();
    let (_, hi) = band_range(&g);
    let delta1 = 0.005;
    let sched = cascade_prepare(&s, &eos, 1.0, delta1, hi, 1.0, 1.8).unwrap();
    let target = 2f64.powf(-delta1);
    let ratio_err = sched.entries.windows(2).map(|w| (w[1].t_star / w[0].t_star - target).abs()).fold(0.0, f64::max);
    let hdot = homogeneous_sobolev_norm(&s.h, 1.8).unwrap();
    let fitted = sched.bernstein_sup() / hdot;
    (
        ratio_err <= 2.0 * f64::EPSILON && fitted <= 1.0,
        format!("max |T*ratio − 2^−δ₁| {ratio_err:.1e}; sup_j 2^{{sj}}‖h₀ⱼ₊₁ − h₀ⱼ‖ / ‖h₀‖_Ḣˢ = {fitted:.3} over j ≤ {}", sched.jmax),
    )
}

fn negative_controls(runs: &[(Preset, EquationOfState, Trajectory)]) -> Verdict {
    let eos = EquationOfState::new(2.0).unwrap();
    let g = Grid2D::square(32).unwrap();
    let states = (0..17).map(|k| initial_state(Preset::RandomSmooth, &g, &eos, 0.2, 100 + k).unwrap()).collect();
    let traj = Trajectory::new(0.0, cfl_dt(&g, 0.4), states).unwrap();
    let rhs = curl_w_rhs(&traj, 2, 14).unwrap();
    let vm = solve_vminus(&traj, 2, 14, &rhs, &SolveOptions::default()).unwrap();
    let r = wave_residuals(&traj, 8, &eos, Some(&vm)).unwrap().norms();
    let vp = r.res_vplus.unwrap();
    let residuals_large = r.res_h >= 0.1 && r.res_v >= 0.1 && vp >= 0.1;
    let vortex = &runs.iter().find(|r| r.0 == Preset::Vortex).unwrap().2;
    let jets = StateJets::at(vortex, vortex.len() / 2, 2).unwrap();
    let eos2 = EquationOfState::new(2.0).unwrap();
    let good = hodge_identity_checks(&jets, &eos2, &LeviCivita::new(EpsilonConvention::Symbol)).unwrap();
    let bad = hodge_identity_checks(&jets, &eos2, &LeviCivita::new(EpsilonConvention::MinkowskiLowered)).unwrap();
    (
        residuals_large && good.passed(1e-6) && !bad.contraction_ok() && !bad.passed(1e-6),
        format!(
            "non-solution residuals h {:.2}, v {:.2}, v₊ {vp:.2}; contraction error symbol {}, flipped {}",
            r.res_h, r.res_v, good.contraction_max_error, bad.contraction_max_error
        ),
    )
}

fn main() {
    let start = Instant::now();
    let runs = default_runs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("ellipticity certificate", Box::new(ellipticity)),
        ("constraint exactness", Box::new(|| constraint(&runs))),
        ("divergence-free vorticity", Box::new(|| divergence(&runs))),
        ("wave-transport residuals", Box::new(wave_transport)),
        ("v₊ improved equation", Box::new(vplus)),
        ("stiff algebraic identity", Box::new(|| stiff_identity(&runs))),
        ("stiff metric", Box::new(|| stiff_metric(&runs))),
        ("constant-coefficient elliptic oracle", Box::new(elliptic_oracle)),
        ("null-frame contract", Box::new(|| null_frame(&runs))),
        ("Gronwall audit", Box::new(|| gronwall(&runs))),
        ("cascade shapes", Box::new(cascade)),
        ("negative controls", Box::new(|| negative_controls(&runs))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("acceptance: {} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
