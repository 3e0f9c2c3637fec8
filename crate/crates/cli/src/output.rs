//! Run directory and the single writer all reports go through.

use crate::config::RunConfig;
use releuler::field::{write_snapshot, ScalarField2D};
use releuler::scenario::RNG_NAME;
use serde::Serialize;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Owns the run directory; every file of a run is written through it.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl RunWriter {
    /// Creates `<output_dir>/<scenario>-<UTC timestamp>[-k]`.
    pub fn create(output_dir: &Path, scenario: &str) -> std::io::Result<Self> {
        fs::create_dir_all(output_dir)?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{scenario}-{stamp}");
        let mut dir = output_dir.join(&base);
        let mut k = 1;
        while dir.exists() {
            dir = output_dir.join(format!("{base}-{k}"));
            k += 1;
        }
        fs::create_dir(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Names of the files written so far.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> std::io::Result<()> {
        let p = self.path(name);
        fs::write(p, text)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        self.write_text(name, &(text + "\n"))
    }

    /// Numeric CSV with 17-significant-digit cells.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(p).map_err(std::io::Error::other)?;
        w.write_record(header).map_err(std::io::Error::other)?;
        for row in rows {
            w.write_record(row.iter().map(|x| fmt17(*x))).map_err(std::io::Error::other)?;
        }
        w.flush()
    }

    pub fn write_snapshot(&mut self, name: &str, field: &ScalarField2D, label: &str, time: f64) -> std::io::Result<()> {
        let p = self.path(name);
        let f = BufWriter::new(fs::File::create(p)?);
        write_snapshot(f, field, label, time).map_err(std::io::Error::other)
    }

    /// Config echo and versions manifest.
    pub fn write_preamble(&mut self, config: &RunConfig, command: &str) -> std::io::Result<()> {
        self.write_text("config.toml", &config.to_toml())?;
        let manifest = Manifest {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            debug_assertions: cfg!(debug_assertions),
            rng: RNG_NAME,
            seed: config.seed,
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    package: &'static str,
    version: &'static str,
    command: String,
    os: &'static str,
    arch: &'static str,
    debug_assertions: bool,
    rng: &'static str,
    seed: u64,
}
