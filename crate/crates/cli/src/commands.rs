//! Subcommand orchestration: evolve, verify, cascade, geometry, norms.

use crate::checks::{self, CheckResult, PairResiduals, RefinementPair};
use crate::config::{ConfigError, RunConfig};
use crate::error::{CliError, EXIT_CHECK_FAILURE, EXIT_OK};
use crate::output::RunWriter;
use releuler::diagnostics::{
    cascade_differences, cascade_prepare, dyadic_strichartz_table, EnergyReport, GronwallReport,
};
use releuler::field::{band_range, mixed_norms, Axis, ScalarField2D};
use releuler::geometry::{
    build_null_frame, check_ordering, connection_chi, evolve_foliation, foliation_norms, foliation_summary,
    reference_speed,
};
use releuler::hyperbolic::{cfl_dt, evolve, EvolveOptions, Trajectory};
use releuler::scenario::initial_state;
use releuler::thermo::{EquationOfState, FluidState};
use releuler::vorticity::ResidualReport;
use serde::Serialize;
use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

/// Checks that need a refinement pair and are run by `verify` only.
pub const PAIR_CHECKS: [&str; 2] = ["wave", "vplus"];

/// Result of a completed command.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub checks: Vec<CheckResult>,
}

impl Outcome {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures().is_empty() {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILURE
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    command: &'a str,
    scenario: &'a str,
    passed: bool,
    failures: Vec<&'a str>,
    checks: &'a [CheckResult],
    files: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Failure {
    error: String,
    completed_steps: usize,
    last_time: f64,
}

/// Equation of state and initial data for a validated config.
pub fn setup(config: &RunConfig) -> Result<(EquationOfState, FluidState), CliError> {
    let eos = EquationOfState::new(config.a).map_err(|e| ConfigError::Invalid {
        field: "A".into(),
        message: e.to_string(),
    })?;
    let state = initial_state(config.preset(), &config.grid(), &eos, config.amplitude, config.seed)
        .map_err(CliError::InitialData)?;
    Ok((eos, state))
}

fn options(config: &RunConfig) -> EvolveOptions {
    EvolveOptions {
        cfl: config.cfl,
        filter: config.filter,
    }
}

fn energy_rows(reports: &[EnergyReport], gronwall: Option<&GronwallReport>) -> Vec<Vec<f64>> {
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = gronwall.map_or(f64::NAN, |g| g.samples[i].k);
            vec![
                r.t,
                r.energy,
                r.parts.h_hs,
                r.parts.v_hs,
                r.parts.w_hs,
                r.parts.grad_w_l8,
                r.strich_accum,
                k,
            ]
        })
        .collect()
}

const ENERGY_HEADER: [&str; 8] = ["t", "E", "h_Hs", "v_Hs", "w_Hs", "grad_w_L8", "strich_accum", "K"];

fn write_state(writer: &mut RunWriter, state: &FluidState, tag: &str, time: f64) -> std::io::Result<()> {
    for (name, f) in [("h", &state.h), ("v1", &state.v1), ("v2", &state.v2)] {
        writer.write_snapshot(&format!("{name}_{tag}.bin"), f, name, time)?;
    }
    Ok(())
}

/// Evolves the initial data, writing partial outputs and a failure report on blow-up.
fn run_evolution(
    config: &RunConfig,
    eos: &EquationOfState,
    initial: &FluidState,
    writer: &mut RunWriter,
) -> Result<Trajectory, CliError> {
    let mut seen: Vec<FluidState> = Vec::new();
    let mut dt = 0.0;
    let mut record = |step: usize, time: f64, st: &FluidState| {
        if step == 1 {
            dt = time;
        }
        seen.push(st.clone());
        ControlFlow::Continue(())
    };
    let result = evolve(initial, config.t_final, eos, &options(config), &mut record);
    match result {
        Ok(traj) => Ok(traj),
        Err(source) => {
            let completed = seen.len().saturating_sub(1);
            let last_time = completed as f64 * dt;
            if let Some(last) = seen.last() {
                write_state(writer, last, "last", last_time)?;
            }
            if seen.len() >= 2 {
                if let Ok(reports) = Trajectory::new(0.0, dt, seen).and_then(|t| checks::energy(&t, eos, config)) {
                    writer.write_csv("energy.csv", &ENERGY_HEADER, &energy_rows(&reports, None))?;
                }
            }
            writer.write_json(
                "failure.json",
                &Failure {
                    error: source.to_string(),
                    completed_steps: completed,
                    last_time,
                },
            )?;
            Err(CliError::Runtime {
                source,
                dir: Some(writer.dir().to_path_buf()),
            })
        }
    }
}

/// Attaches the run directory to runtime errors raised after the evolution.
fn in_dir(dir: &Path) -> impl Fn(releuler::Error) -> CliError {
    let dir = dir.to_path_buf();
    move |source| CliError::Runtime {
        source,
        dir: Some(dir.clone()),
    }
}

fn start(config: &RunConfig, command: &str) -> Result<(EquationOfState, FluidState, RunWriter), CliError> {
    let (eos, initial) = setup(config)?;
    let mut writer = RunWriter::create(Path::new(&config.output_dir), &config.scenario)?;
    writer.write_preamble(config, command)?;
    Ok((eos, initial, writer))
}

fn finish(mut writer: RunWriter, config: &RunConfig, command: &str, checks: Vec<CheckResult>) -> Result<Outcome, CliError> {
    let mut files = writer.files().to_vec();
    files.push("summary.json".into());
    let summary = Summary {
        command,
        scenario: &config.scenario,
        passed: checks.iter().all(|c| c.passed),
        failures: checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect(),
        checks: &checks,
        files,
    };
    writer.write_json("summary.json", &summary)?;
    Ok(Outcome {
        dir: writer.dir().to_path_buf(),
        checks,
    })
}

/// Runs the named checks on a trajectory; pair checks use `pair` when given.
fn run_checks(
    names: &[String],
    traj: &Trajectory,
    eos: &EquationOfState,
    config: &RunConfig,
    reports: &[EnergyReport],
    pair: Option<(&RefinementPair, &PairResiduals)>,
) -> releuler::Result<(Vec<CheckResult>, Option<GronwallReport>)> {
    let mut out = Vec::new();
    let mut gronwall = None;
    for name in names {
        let res = match name.as_str() {
            "constraint" => checks::check_constraint(traj),
            "minors" => checks::check_minors(traj),
            "divergence" => checks::check_divergence(traj)?,
            "hodge" => checks::check_hodge(traj, eos, config)?,
            "stiff" => checks::check_stiff(traj, eos, config.preset().rotational(), pair.map(|p| p.0))?.0,
            "wave" => match pair {
                Some((_, r)) => checks::check_wave(r),
                None => continue,
            },
            "vplus" => match pair {
                Some((_, r)) => checks::check_vplus(r),
                None => continue,
            },
            "frame" => checks::check_frame(traj, eos, config)?,
            "gronwall" => {
                let (c, g) = checks::check_gronwall(traj, eos, reports, config)?;
                gronwall = Some(g);
                c
            }
            "phase" => checks::check_phase(traj, eos),
            other => unreachable!("unvalidated check {other}"),
        };
        out.push(res);
    }
    Ok((out, gronwall))
}

/// Evolves the scenario and runs the enabled single-resolution checks.
pub fn run_evolve(config: &RunConfig) -> Result<Outcome, CliError> {
    let (eos, initial, mut writer) = start(config, "evolve")?;
    let traj = run_evolution(config, &eos, &initial, &mut writer)?;
    write_state(&mut writer, &traj.states[0], "initial", 0.0)?;
    write_state(&mut writer, traj.last(), "final", traj.time(traj.len() - 1))?;
    let reports = checks::energy(&traj, &eos, config).map_err(in_dir(writer.dir()))?;
    let names: Vec<String> = config
        .effective_checks()
        .into_iter()
        .filter(|c| !PAIR_CHECKS.contains(&c.as_str()))
        .collect();
    let (results, gronwall) = run_checks(&names, &traj, &eos, config, &reports, None).map_err(in_dir(writer.dir()))?;
    let gronwall = match gronwall {
        Some(g) => g,
        None => checks::check_gronwall(&traj, &eos, &reports, config).map_err(in_dir(writer.dir()))?.1,
    };
    writer.write_csv("energy.csv", &ENERGY_HEADER, &energy_rows(&reports, Some(&gronwall)))?;
    finish(writer, config, "evolve", results)
}

#[derive(Debug, Serialize)]
struct Verdict<'a> {
    passed: bool,
    failures: Vec<&'a str>,
    checks: Vec<(&'a str, bool)>,
}

/// Runs the full identity suite and writes a machine-readable verdict.
pub fn run_verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let (eos, initial, mut writer) = start(config, "verify")?;
    let traj = run_evolution(config, &eos, &initial, &mut writer)?;
    let names = config.effective_checks();
    let needs_pair = names.iter().any(|c| PAIR_CHECKS.contains(&c.as_str()))
        || (names.iter().any(|c| c == "stiff") && !config.preset().rotational());
    let pair = if needs_pair {
        let pair = RefinementPair::build(config, &eos).map_err(in_dir(writer.dir()))?;
        let with_vplus = names.iter().any(|c| c == "vplus");
        let res = PairResiduals::compute(&pair, &eos, with_vplus).map_err(in_dir(writer.dir()))?;
        writer.write_text("convergence.csv", &releuler::wave::convergence_csv(&res.rows(&config.scenario)))?;
        let mut residual_l2 = BTreeMap::new();
        for row in res.rows(&config.scenario).iter().filter(|r| r.nx == config.nx) {
            residual_l2.insert(row.equation.clone(), row.l2_residual);
        }
        let report = ResidualReport {
            scenario: config.scenario.clone(),
            nx: config.nx,
            dt: pair.fine.dt,
            slice: pair.slice[1],
            residual_l2,
        };
        writer.write_json("residuals.json", &report)?;
        Some((pair, res))
    } else {
        None
    };
    let reports = checks::energy(&traj, &eos, config).map_err(in_dir(writer.dir()))?;
    let (results, _) = run_checks(&names, &traj, &eos, config, &reports, pair.as_ref().map(|(p, r)| (p, r)))
        .map_err(in_dir(writer.dir()))?;
    let verdict = Verdict {
        passed: results.iter().all(|c| c.passed),
        failures: results.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect(),
        checks: results.iter().map(|c| (c.name.as_str(), c.passed)).collect(),
    };
    writer.write_json("verdict.json", &verdict)?;
    finish(writer, config, "verify", results)
}

#[derive(Debug, Serialize)]
struct CascadeJson {
    m0: f64,
    delta1: f64,
    c: f64,
    s: f64,
    jmax_requested: i32,
    jmax: i32,
    clamped: bool,
    bernstein_sup: f64,
    max_ratio_defect: f64,
}

/// Largest `|T*_{j+1}/T*_j · 2^{δ₁} − 1|` over the ladder.
pub fn t_star_ratio_defect(t_star: &[f64], delta1: f64) -> f64 {
    t_star
        .windows(2)
        .map(|w| (w[1] / w[0] * 2f64.powf(delta1) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Truncated-data ladder with `T*_j` and Bernstein increments.
pub fn run_cascade(config: &RunConfig) -> Result<Outcome, CliError> {
    let (eos, initial, mut writer) = start(config, "cascade")?;
    let m0 = match config.m0 {
        Some(m) => m,
        None => {
            let t = Trajectory::new(0.0, 1.0, vec![initial.clone()])?;
            checks::energy(&t, &eos, config).map_err(in_dir(writer.dir()))?[0].energy
        }
    };
    let (_, hi) = band_range(initial.grid());
    let jmax = config.jmax.map_or(hi, |j| j as i32);
    let schedule = cascade_prepare(&initial, &eos, m0, config.delta1, jmax, config.cascade_c, config.s)
        .map_err(in_dir(writer.dir()))?;
    if schedule.clamped {
        eprintln!("warning: jmax {} clamped to {}", schedule.jmax_requested, schedule.jmax);
    }
    let rows: Vec<Vec<f64>> = schedule
        .entries
        .iter()
        .map(|e| {
            let inc = e.increment_l2.unwrap_or(f64::NAN);
            vec![
                e.j as f64,
                e.t_star,
                e.state.h.l2_norm(),
                inc,
                inc * 2f64.powf(config.s * e.j as f64),
            ]
        })
        .collect();
    writer.write_csv("cascade.csv", &["j", "T_star", "h_L2", "increment_L2", "increment_scaled"], &rows)?;
    let t_stars: Vec<f64> = schedule.entries.iter().map(|e| e.t_star).collect();
    let defect = t_star_ratio_defect(&t_stars, config.delta1);
    writer.write_json(
        "cascade.json",
        &CascadeJson {
            m0,
            delta1: schedule.delta1,
            c: schedule.c,
            s: schedule.s,
            jmax_requested: schedule.jmax_requested,
            jmax: schedule.jmax,
            clamped: schedule.clamped,
            bernstein_sup: schedule.bernstein_sup(),
            max_ratio_defect: defect,
        },
    )?;
    if config.cascade_steps > 0 {
        let dt = cfl_dt(initial.grid(), config.cfl);
        let diffs = cascade_differences(&schedule, &eos, dt, config.cascade_steps, &options(config))
            .map_err(in_dir(writer.dir()))?;
        let rows: Vec<Vec<f64>> = diffs.iter().map(|d| vec![d.j as f64, d.time, d.diff_l2]).collect();
        writer.write_csv("differences.csv", &["j", "t", "diff_L2"], &rows)?;
    }
    let tol = 8.0 * f64::EPSILON;
    let decreasing = t_stars.windows(2).all(|w| w[1] < w[0]);
    let check = CheckResult {
        name: "t_star_ratio".into(),
        passed: defect <= tol && decreasing,
        value: defect,
        threshold: tol,
        detail: format!("max |T*_(j+1)/T*_j · 2^δ₁ − 1| = {defect:.3e}, strictly decreasing {decreasing}"),
        metrics: BTreeMap::new(),
    };
    finish(writer, config, "cascade", vec![check])
}

fn theta_tag(theta: &str) -> String {
    theta.replace('+', "p").replace('-', "m")
}

#[derive(Debug, Serialize)]
struct LeafJson {
    r: f64,
    file: String,
    null_defect: f64,
    gram_defect: f64,
    flat_deviation: f64,
    chi_sup: f64,
    audit_residual_sup: f64,
    audit: Vec<releuler::geometry::AuditRow>,
    foliation_norm: f64,
}

#[derive(Debug, Serialize)]
struct GeometryJson {
    theta: String,
    reference_speed: f64,
    s0: f64,
    leaves: Vec<LeafJson>,
}

/// Null foliations, frames and `χ` for every configured leaf.
pub fn run_geometry(config: &RunConfig) -> Result<Outcome, CliError> {
    let (eos, initial, mut writer) = start(config, "geometry")?;
    let traj = run_evolution(config, &eos, &initial, &mut writer)?;
    let c_ref = config.reference_speed.unwrap_or_else(|| reference_speed(&initial, &eos));
    let dir = config.direction();
    let mut leaves = Vec::new();
    let mut fols = Vec::new();
    let (mut gram, mut null) = (0.0f64, 0.0f64);
    for &r in &config.leaves {
        let err = in_dir(writer.dir());
        let fol = evolve_foliation(&traj, &eos, dir, r, 0).map_err(&err)?;
        let frame = build_null_frame(&traj, &eos, &fol).map_err(&err)?;
        let conn = connection_chi(&traj, &eos, &fol, &frame).map_err(&err)?;
        let norms = foliation_norms(&fol, initial.grid(), c_ref, config.s).map_err(&err)?;
        let rows: Vec<Vec<f64>> = foliation_summary(&fol, Some(&conn))
            .iter()
            .map(|s| {
                vec![
                    s.time,
                    s.min_phi_t_minus_1,
                    s.max_phi_t_minus_1,
                    s.mean_phi_t_minus_1,
                    s.chi_sup.unwrap_or(f64::NAN),
                ]
            })
            .collect();
        let file = format!("foliation_{}_r{}.csv", theta_tag(&config.theta), r);
        writer.write_csv(&file, &["t", "min_dphi_t_minus_1", "max_dphi_t_minus_1", "mean_dphi_t_minus_1", "chi_sup"], &rows)?;
        gram = gram.max(frame.gram_defect());
        null = null.max(fol.null_defect);
        leaves.push(LeafJson {
            r,
            file,
            null_defect: fol.null_defect,
            gram_defect: frame.gram_defect(),
            flat_deviation: frame.flat_deviation(),
            chi_sup: conn.chi_sup(),
            audit_residual_sup: conn.audit_residual_sup(),
            audit: conn.audit,
            foliation_norm: norms.value,
        });
        fols.push(fol);
    }
    check_ordering(&fols).map_err(in_dir(writer.dir()))?;
    writer.write_json(
        "geometry.json",
        &GeometryJson {
            theta: config.theta.clone(),
            reference_speed: c_ref,
            s0: config.s,
            leaves,
        },
    )?;
    let value = gram.max(null);
    let check = CheckResult {
        name: "frame".into(),
        passed: value <= checks::FRAME_TOL,
        value,
        threshold: checks::FRAME_TOL,
        detail: format!("Gram defect {gram:.3e}, null defect {null:.3e}"),
        metrics: BTreeMap::new(),
    };
    finish(writer, config, "geometry", vec![check])
}

/// First spatial derivatives of `h` and `v̊`, named `d<axis><field>`.
fn first_derivatives(state: &FluidState) -> releuler::Result<Vec<(String, ScalarField2D)>> {
    let mut out = Vec::new();
    for (name, f) in [("h", &state.h), ("v1", &state.v1), ("v2", &state.v2)] {
        for (a, axis) in [("1", Axis::X1), ("2", Axis::X2)] {
            out.push((format!("d{a}{name}"), f.derivative(axis)?));
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct NormsJson {
    delta: f64,
    s: f64,
    series: BTreeMap<String, releuler::field::MixedNorms>,
}

/// Energy series, dyadic Strichartz table and mixed space-time norms.
pub fn run_norms(config: &RunConfig) -> Result<Outcome, CliError> {
    let (eos, initial, mut writer) = start(config, "norms")?;
    let traj = run_evolution(config, &eos, &initial, &mut writer)?;
    let err = in_dir(writer.dir());
    let reports = checks::energy(&traj, &eos, config).map_err(&err)?;
    let (_, gronwall) = checks::check_gronwall(&traj, &eos, &reports, config).map_err(&err)?;
    let table = dyadic_strichartz_table(&traj, &eos).map_err(&err)?;
    let mut series: BTreeMap<String, Vec<ScalarField2D>> = BTreeMap::new();
    for st in &traj.states {
        for (name, f) in first_derivatives(st).map_err(&err)? {
            series.entry(name).or_default().push(f);
        }
    }
    let mut mixed = BTreeMap::new();
    for (name, s) in &series {
        mixed.insert(name.clone(), mixed_norms(s, traj.dt, config.delta1, config.s - 1.0).map_err(&err)?);
    }
    writer.write_csv("energy.csv", &ENERGY_HEADER, &energy_rows(&reports, Some(&gronwall)))?;
    writer.write_json("strichartz.json", &table)?;
    writer.write_json(
        "mixed_norms.json",
        &NormsJson {
            delta: config.delta1,
            s: config.s - 1.0,
            series: mixed,
        },
    )?;
    finish(writer, config, "norms", Vec::new())
}
