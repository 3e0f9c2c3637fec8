//! Run configuration: a flat TOML file of `key = value` lines, overridden by flags.
//!
//! ```text
//! # comments start with '#'
//! scenario = "gaussian-bump"
//! nx = 64
//! T_final = 1.0
//! A = 2.0
//! checks = ["constraint", "gronwall"]
//! ```

use releuler::diagnostics::check_exponents;
use releuler::field::Grid2D;
use releuler::geometry::Direction;
use releuler::scenario::Preset;
use releuler::vorticity::EpsilonConvention;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Verification passes understood by `verify` and `evolve`.
pub const ALL_CHECKS: [&str; 10] = [
    "constraint",
    "minors",
    "divergence",
    "hodge",
    "stiff",
    "wave",
    "vplus",
    "frame",
    "gronwall",
    "phase",
];

/// Fewest time steps a run may take; time stencils and foliation norms need the slices.
pub const MIN_STEPS: usize = 8;

/// Checks run when the config does not list any.
pub const DEFAULT_CHECKS: [&str; 7] = ["constraint", "minors", "divergence", "hodge", "wave", "frame", "gronwall"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    nx: Option<i64>,
    ny: Option<i64>,
    #[serde(rename = "T_final")]
    t_final: Option<f64>,
    #[serde(rename = "A")]
    a: Option<f64>,
    amplitude: Option<f64>,
    seed: Option<u64>,
    cfl: Option<f64>,
    filter: Option<bool>,
    s: Option<f64>,
    s_prime: Option<f64>,
    delta1: Option<f64>,
    m0: Option<f64>,
    cascade_c: Option<f64>,
    jmax: Option<i64>,
    cascade_steps: Option<i64>,
    gronwall_factor: Option<f64>,
    checks: Option<Vec<String>>,
    output_dir: Option<String>,
    epsilon_convention: Option<String>,
    theta: Option<String>,
    leaves: Option<Vec<f64>>,
    reference_speed: Option<f64>,
}

/// Fully validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "T_final")]
    pub t_final: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub cfl: f64,
    pub filter: bool,
    pub s: f64,
    pub s_prime: f64,
    pub delta1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    pub cascade_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jmax: Option<i64>,
    pub cascade_steps: usize,
    pub gronwall_factor: f64,
    pub checks: Vec<String>,
    pub output_dir: String,
    pub epsilon_convention: String,
    pub theta: String,
    pub leaves: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_speed: Option<f64>,
}

impl RunConfig {
    pub fn preset(&self) -> Preset {
        Preset::from_name(&self.scenario).expect("validated scenario")
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D::new(self.nx, self.ny, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)
            .expect("validated grid")
    }

    pub fn convention(&self) -> EpsilonConvention {
        parse_convention(&self.epsilon_convention).expect("validated convention")
    }

    pub fn direction(&self) -> Direction {
        parse_theta(&self.theta).expect("validated theta")
    }

    /// Effective check list; `stiff` is added when `A = 1` and `phase` for plane-acoustic data.
    pub fn effective_checks(&self) -> Vec<String> {
        let mut out = self.checks.clone();
        if self.a == 1.0 && !out.iter().any(|c| c == "stiff") {
            out.push("stiff".into());
        }
        if self.preset() == Preset::PlaneAcoustic && !out.iter().any(|c| c == "phase") {
            out.push("phase".into());
        }
        out
    }

    /// Config echo in the input grammar.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn parse_convention(s: &str) -> Option<EpsilonConvention> {
    match s {
        "symbol" => Some(EpsilonConvention::Symbol),
        "minkowski-lowered" => Some(EpsilonConvention::MinkowskiLowered),
        _ => None,
    }
}

fn parse_theta(s: &str) -> Option<Direction> {
    let d = |axis, sign| Direction::new(axis, sign).ok();
    match s {
        "+x1" => d(0, 1.0),
        "-x1" => d(0, -1.0),
        "+x2" => d(1, 1.0),
        "-x2" => d(1, -1.0),
        _ => None,
    }
}

/// Parses one `key=value` override; bare words are taken as strings.
pub fn parse_override(item: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = item
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override `{item}` is not key=value")))?;
    let key = key.trim().to_string();
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

/// Parses the file text (if any), applies overrides in order, and validates.
pub fn parse_config(file: Option<&str>, overrides: &[(String, toml::Value)]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = match file {
        Some(text) => toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?,
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    validate(raw)
}

/// Reads a config file from disk and parses it with overrides.
pub fn load_config(path: Option<&std::path::Path>, overrides: &[(String, toml::Value)]) -> Result<RunConfig, ConfigError> {
    let text = match path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
            path: p.to_path_buf(),
            source,
        })?),
        None => None,
    };
    parse_config(text.as_deref(), overrides)
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} must be positive")))
    }
}

fn grid_size(field: &str, v: i64) -> Result<usize, ConfigError> {
    if v >= 16 && (v as u64).is_power_of_two() {
        Ok(v as usize)
    } else {
        Err(invalid(field, format!("{v} must be a power of two ≥ 16")))
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let scenario = raw.scenario.ok_or(ConfigError::Missing("scenario"))?;
    let preset = Preset::from_name(&scenario).ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        invalid("scenario", format!("unknown preset `{scenario}` (expected one of {})", names.join(", ")))
    })?;
    let nx = grid_size("nx", raw.nx.unwrap_or(128))?;
    let ny = grid_size("ny", raw.ny.unwrap_or(nx as i64))?;
    let t_final = positive("T_final", raw.t_final.unwrap_or(1.0))?;
    let a = raw.a.unwrap_or(if preset.requires_stiff() { 1.0 } else { 2.0 });
    if !(a.is_finite() && a >= 1.0) {
        return Err(invalid("A", "A must be ≥ 1"));
    }
    if preset.requires_stiff() && a != 1.0 {
        return Err(invalid("A", format!("preset {scenario} requires A = 1")));
    }
    let amplitude = raw.amplitude.unwrap_or_else(|| preset.default_amplitude());
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(invalid("amplitude", format!("{amplitude} must be finite and ≥ 0")));
    }
    let cfl = positive("cfl", raw.cfl.unwrap_or(0.4))?;
    if cfl > 1.0 {
        return Err(invalid("cfl", format!("{cfl} must be ≤ 1")));
    }
    let dx = 2.0 * std::f64::consts::PI / nx.max(ny) as f64;
    let steps = (t_final / (cfl * dx) - 1e-9).ceil() as usize;
    if steps < MIN_STEPS {
        return Err(invalid(
            "T_final",
            format!("{t_final} gives {steps} steps at this grid and cfl; at least {MIN_STEPS} are needed"),
        ));
    }
    let s = raw.s.unwrap_or(1.8);
    let s_prime = raw.s_prime.unwrap_or(1.8);
    check_exponents(s, s_prime).map_err(|e| match e {
        releuler::Error::OutOfRange { what, detail } => invalid(&what, detail),
        other => invalid("s", other.to_string()),
    })?;
    let delta1 = raw.delta1.unwrap_or((s - 1.75) / 10.0);
    if !(delta1 > 0.0 && delta1 <= 1.0 / 80.0) {
        return Err(invalid("delta1", format!("{delta1} not in (0, 1/80]")));
    }
    let delta1_bound = (s - 1.75) / 10.0;
    if delta1 > delta1_bound * (1.0 + 1e-12) {
        return Err(invalid("delta1", format!("{delta1} exceeds (s − 7/4)/10 = {delta1_bound}")));
    }
    if let Some(m0) = raw.m0 {
        positive("m0", m0)?;
    }
    let cascade_c = positive("cascade_c", raw.cascade_c.unwrap_or(1.0))?;
    let cascade_steps = raw.cascade_steps.unwrap_or(0);
    if cascade_steps < 0 {
        return Err(invalid("cascade_steps", "must be ≥ 0"));
    }
    let gronwall_factor = positive("gronwall_factor", raw.gronwall_factor.unwrap_or(3.0))?;
    let checks = match raw.checks {
        Some(list) => {
            for c in &list {
                if !ALL_CHECKS.contains(&c.as_str()) {
                    return Err(invalid("checks", format!("unknown check `{c}` (expected any of {})", ALL_CHECKS.join(", "))));
                }
            }
            if a != 1.0 && list.iter().any(|c| c == "stiff") {
                return Err(invalid("checks", "check `stiff` needs A = 1"));
            }
            if preset != Preset::PlaneAcoustic && list.iter().any(|c| c == "phase") {
                return Err(invalid("checks", "check `phase` needs the plane-acoustic preset"));
            }
            list
        }
        None => DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect(),
    };
    let epsilon_convention = raw.epsilon_convention.unwrap_or_else(|| "symbol".into());
    if parse_convention(&epsilon_convention).is_none() {
        return Err(invalid("epsilon_convention", format!("`{epsilon_convention}` (expected symbol or minkowski-lowered)")));
    }
    let theta = raw.theta.unwrap_or_else(|| "+x2".into());
    if parse_theta(&theta).is_none() {
        return Err(invalid("theta", format!("`{theta}` (expected +x1, -x1, +x2 or -x2)")));
    }
    let leaves = raw.leaves.unwrap_or_else(|| vec![1.0, 2.0]);
    if leaves.is_empty() || leaves.iter().any(|r| !r.is_finite()) {
        return Err(invalid("leaves", "need at least one finite level"));
    }
    if let Some(c) = raw.reference_speed {
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid("reference_speed", format!("{c} not in (0, 1]")));
        }
    }
    Ok(RunConfig {
        scenario,
        nx,
        ny,
        t_final,
        a,
        amplitude,
        seed: raw.seed.unwrap_or(0),
        cfl,
        filter: raw.filter.unwrap_or(false),
        s,
        s_prime,
        delta1,
        m0: raw.m0,
        cascade_c,
        jmax: raw.jmax,
        cascade_steps: cascade_steps as usize,
        gronwall_factor,
        checks,
        output_dir: raw.output_dir.unwrap_or_else(|| "runs".into()),
        epsilon_convention,
        theta,
        leaves,
        reference_speed: raw.reference_speed,
    })
}
