//! `releuler` command-line entry point.

use clap::{Args, Parser, Subcommand};
use releuler_cli::commands::{run_cascade, run_evolve, run_geometry, run_norms, run_verify, Outcome};
use releuler_cli::config::{load_config, parse_override, ConfigError};
use releuler_cli::error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "releuler", version, about = "Relativistic Euler evolution and verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a scenario and write snapshots, energy series and inline checks.
    Evolve,
    /// Run the full identity suite and write a verdict.
    Verify,
    /// Build the truncated-data cascade.
    Cascade,
    /// Evolve null foliations and frames.
    Geometry,
    /// Energy series, Strichartz band table and mixed norms.
    Norms,
}

#[derive(Debug, Args)]
struct Flags {
    /// Config file (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set cfl=0.3`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    scenario: Option<String>,
    #[arg(long, global = true)]
    nx: Option<i64>,
    #[arg(long, global = true)]
    ny: Option<i64>,
    #[arg(long = "t-final", global = true)]
    t_final: Option<f64>,
    /// Equation-of-state exponent.
    #[arg(long = "a", global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    amplitude: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "output-dir", global = true)]
    output_dir: Option<String>,
    /// Comma-separated check list.
    #[arg(long, global = true, value_delimiter = ',')]
    checks: Option<Vec<String>>,
}

impl Flags {
    fn overrides(&self) -> Result<Vec<(String, toml::Value)>, ConfigError> {
        let mut out = Vec::new();
        for item in &self.set {
            out.push(parse_override(item)?);
        }
        let mut put = |k: &str, v: toml::Value| out.push((k.to_string(), v));
        if let Some(v) = &self.scenario {
            put("scenario", v.clone().into());
        }
        if let Some(v) = self.nx {
            put("nx", v.into());
        }
        if let Some(v) = self.ny {
            put("ny", v.into());
        }
        if let Some(v) = self.t_final {
            put("T_final", v.into());
        }
        if let Some(v) = self.a {
            put("A", v.into());
        }
        if let Some(v) = self.amplitude {
            put("amplitude", v.into());
        }
        if let Some(v) = self.seed {
            let v = i64::try_from(v).map_err(|_| ConfigError::Invalid {
                field: "seed".into(),
                message: format!("{v} too large"),
            })?;
            put("seed", v.into());
        }
        if let Some(v) = &self.output_dir {
            put("output_dir", v.clone().into());
        }
        if let Some(v) = &self.checks {
            put("checks", toml::Value::Array(v.iter().map(|c| c.clone().into()).collect()));
        }
        Ok(out)
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let overrides = cli.flags.overrides()?;
    let config = load_config(cli.flags.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Evolve => run_evolve(&config),
        Command::Verify => run_verify(&config),
        Command::Cascade => run_cascade(&config),
        Command::Geometry => run_geometry(&config),
        Command::Norms => run_norms(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for c in &outcome.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            println!("run directory: {}", outcome.dir.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Runtime { dir: Some(d), .. } = &e {
                eprintln!("partial outputs in {}", d.display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
