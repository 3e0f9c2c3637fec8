//! End-to-end runs of the `releuler` binary.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn releuler(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_releuler"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_dir(out: &Path) -> PathBuf {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = releuler(tmp.path(), &["evolve", "--scenario", "gaussian-bump", "--a", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("A must be ≥ 1"), "{}", stderr(&o));
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "scenario = \"vortex\"\ngrid = 64\n").unwrap();
    let o = releuler(tmp.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid"));
    let o = releuler(tmp.path(), &["evolve", "--nx", "32"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario"));
    let o = releuler(tmp.path(), &["evolve", "--scenario", "gaussian-bump", "--nx", "16", "--amplitude", "0.45"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "scenario = \"gaussian-bump\"\nnx = 128\nT_final = 1.5\nchecks = [\"constraint\"]\n").unwrap();
    let out = tmp.path().join("runs");
    let o = releuler(&out, &["evolve", "--config", cfg.to_str().unwrap(), "--nx", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echo = std::fs::read_to_string(run_dir(&out).join("config.toml")).unwrap();
    assert!(echo.contains("nx = 16"), "{echo}");
}

#[test]
fn blow_up_exits_with_three_and_keeps_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = releuler(
        tmp.path(),
        &["evolve", "--scenario", "random-smooth", "--nx", "16", "--amplitude", "0.3", "--t-final", "30", "--checks", "constraint"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("partial outputs"));
    let dir = run_dir(tmp.path());
    let failure = json(&dir.join("failure.json"));
    assert!(failure["completed_steps"].as_u64().unwrap() > 0);
    assert!(dir.join("h_last.bin").exists());
    assert!(dir.join("energy.csv").exists());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn run_directory_has_echo_manifest_and_listed_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = releuler(tmp.path(), &["evolve", "--scenario", "vortex", "--nx", "16", "--t-final", "1.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = run_dir(tmp.path());
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("vortex-"));
    let manifest = json(&dir.join("manifest.json"));
    assert_eq!(manifest["command"], "evolve");
    assert_eq!(manifest["seed"], 0);
    assert!(manifest["rng"].as_str().unwrap().len() > 0);
    assert!(manifest["version"].is_string());
    let summary = json(&dir.join("summary.json"));
    assert_eq!(summary["passed"], true);
    for f in summary["files"].as_array().unwrap() {
        assert!(dir.join(f.as_str().unwrap()).exists(), "{f}");
    }
    for f in ["config.toml", "energy.csv", "h_initial.bin", "v2_final.bin"] {
        assert!(summary["files"].as_array().unwrap().iter().any(|x| x == f), "{f}");
    }
    let echo = std::fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(echo.contains("scenario = \"vortex\""));
    let energy = std::fs::read_to_string(dir.join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,E,h_Hs,v_Hs,w_Hs,grad_w_L8,strich_accum,K"));
    let cell = energy.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(cell.split('e').next().unwrap().replace(['-', '.'], "").len(), 17, "{cell}");
}

#[test]
fn identical_runs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["evolve", "--scenario", "random-smooth", "--nx", "16", "--t-final", "1.5", "--seed", "11"];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(releuler(&a, &args).status.code(), Some(0));
    assert_eq!(releuler(&b, &args).status.code(), Some(0));
    let ea = std::fs::read(run_dir(&a).join("energy.csv")).unwrap();
    let eb = std::fs::read(run_dir(&b).join("energy.csv")).unwrap();
    assert_eq!(ea, eb);
    let c = tmp.path().join("c");
    releuler(&c, &["evolve", "--scenario", "random-smooth", "--nx", "16", "--t-final", "1.5", "--seed", "12"]);
    assert_ne!(ea, std::fs::read(run_dir(&c).join("energy.csv")).unwrap());
}

#[test]
fn flipped_epsilon_convention_fails_hodge() {
    let tmp = tempfile::tempdir().unwrap();
    let o = releuler(
        tmp.path(),
        &["verify", "--scenario", "vortex", "--nx", "32", "--t-final", "1.0", "--checks", "hodge,divergence", "--set", "epsilon_convention=minkowski-lowered"],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL hodge"), "{}", stdout(&o));
    let verdict = json(&run_dir(tmp.path()).join("verdict.json"));
    assert_eq!(verdict["passed"], false);
    assert_eq!(verdict["failures"], serde_json::json!(["hodge"]));
}

#[test]
fn unit_exponent_vortex_adds_stiff_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = releuler(tmp.path(), &["verify", "--scenario", "vortex", "--a", "1", "--nx", "32", "--t-final", "1.0", "--checks", "constraint"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS stiff"), "{}", stdout(&o));
}

#[test]
fn plane_acoustic_phase_speed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = releuler(tmp.path(), &["evolve", "--scenario", "plane-acoustic", "--nx", "32", "--checks", "constraint"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = json(&run_dir(tmp.path()).join("summary.json"));
    let phase = summary["checks"].as_array().unwrap().iter().find(|c| c["name"] == "phase").unwrap().clone();
    let speed = phase["metrics"]["phase_speed"].as_f64().unwrap();
    assert!((speed / 0.5f64.sqrt() - 1.0).abs() <= 0.01, "{speed}");
}

#[test]
fn vortex_at_nx_64_within_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let o = releuler(tmp.path(), &["evolve", "--scenario", "vortex", "--nx", "64"]);
    let elapsed = t.elapsed().as_secs_f64();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(elapsed < 60.0, "{elapsed} s");
}

#[test]
fn cascade_geometry_and_norms_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, files) in [
        ("cascade", &["cascade.csv", "cascade.json"][..]),
        ("geometry", &["geometry.json"][..]),
        ("norms", &["energy.csv", "strichartz.json", "mixed_norms.json"][..]),
    ] {
        let out = tmp.path().join(cmd);
        let o = releuler(&out, &[cmd, "--scenario", "gaussian-bump", "--nx", "32", "--t-final", "1.0"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}{}", stdout(&o), stderr(&o));
        let dir = run_dir(&out);
        for f in files {
            assert!(dir.join(f).exists(), "{cmd}: {f}");
        }
        assert_eq!(json(&dir.join("manifest.json"))["command"], cmd);
    }
}
