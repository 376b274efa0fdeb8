//! End-to-end runs of the `phasequant` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Output;

const HARMONIC: &str = r#"
[grid]
dim = 1
extent = [-10.0, 10.0]
points = 128

[window]
family = "hermite"
index = 0
lambda = 1.0
momentum_points = 128

[hamiltonian]
kind = "harmonic"
omega = 1.0

[run]
t_final = 6.283185307179586
steps = 2000

[run.initial]
q0 = [2.0]
p0 = [0.5]
sigma = 0.7

[verify]
seed = 3

[spectrum]
levels = 12
"#;

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Writes `config` into a fresh directory and runs `phasequant <cmd>` with
/// the output directory next to it.
fn run(name: &str, config: &str, cmd: &str, extra: &[&str]) -> (Output, PathBuf) {
    let dir = workdir(name);
    let cfg = dir.join("scenario.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_phasequant")).args(&args).output().unwrap();
    (o, out)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_passes_on_the_harmonic_scenario() {
    let (o, out) = run("verify_ok", HARMONIC, "verify", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("verify.json"));
    assert_eq!(v["pass"], true);
    let names: Vec<&str> = v["suites"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["commutators", "involutions", "isometries", "signs", "energy", "weak"]);
    assert!(out.join("timing.json").exists());
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let cfg = HARMONIC.replace(
        "[verify]\nseed = 3\n",
        "[verify]\nseed = 3\nsuites = [\"commutators\"]\n\n[verify.tolerances]\ncommutators = 1e-30\n",
    );
    let (o, out) = run("verify_fail", &cfg, "verify", &[]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&out.join("verify.json"))["pass"], false);
}

#[test]
fn suite_alias_selects_the_galileo_checks() {
    let (o, out) = run("verify_alias", HARMONIC, "verify", &["--suite", "galileo"]);
    assert_eq!(code(&o), 0);
    let v = json(&out.join("verify.json"));
    let names: Vec<&str> = v["suites"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["commutators", "involutions"]);
}

#[test]
fn config_errors_exit_with_two() {
    let (o, _) = run("unknown_key", &HARMONIC.replace("omega = 1.0", "omega = 1.0\nomgea = 2.0"), "verify", &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("omgea"));
    // randomized suites without any seed
    let (o, _) = run("no_seed", &HARMONIC.replace("[verify]\nseed = 3\n", ""), "verify", &["--suite", "isometries"]);
    assert_eq!(code(&o), 2);
    let (o, _) = run("bad_family", &HARMONIC.replace("\"hermite\"", "\"planar\""), "evolve", &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn evolve_records_a_unitary_trajectory() {
    let (o, out) = run("evolve", HARMONIC, "evolve", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&out.join("evolution.csv"));
    assert_eq!(rows.len(), 2001);
    let norm = header.iter().position(|h| h == "norm").unwrap();
    assert!(rows.iter().all(|r| (r[norm] - 1.0).abs() <= 1e-8));
    // ⟨q⟩ returns to q₀ after one period
    let q = header.iter().position(|h| h == "reQ_0").unwrap();
    assert!((rows[2000][q] - 2.0).abs() < 1e-6);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["rows"], 2001);
}

#[test]
fn zero_steps_write_the_initial_row_only() {
    let (o, out) = run("evolve_zero", &HARMONIC.replace("steps = 2000", "steps = 0"), "evolve", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv(&out.join("evolution.csv"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn harmonic_spectrum_matches_the_shifted_ladder() {
    let (o, out) = run("spectrum", HARMONIC, "spectrum", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv(&out.join("spectrum.csv"));
    // Gaussian window, ħ = M = ω = λ = 1: E₀ = E₁ = 1/4
    for (n, row) in rows.iter().take(11).enumerate() {
        let want = n as f64 + 0.5 + 0.25 + 0.25;
        assert!(((row[1] - want) / want).abs() < 1e-6, "level {n}: {} vs {want}", row[1]);
    }
}

#[test]
fn quantizing_one_gives_the_identity() {
    let cfg = format!("{HARMONIC}\n[quantize]\nsymbol = \"one\"\nformat = \"binary\"\n");
    let (o, out) = run("quantize_one", &cfg, "quantize", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(out.join("operator.bin")).unwrap();
    let n = 128;
    assert_eq!(bytes.len(), n * n * 16);
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    for r in 0..n {
        for c in 0..n {
            let (re, im) = (vals[2 * (r * n + c)], vals[2 * (r * n + c) + 1]);
            let want = if r == c { 1.0 } else { 0.0 };
            assert!((re - want).abs() < 1e-12 && im.abs() < 1e-12, "({r},{c}) = {re}+{im}i");
        }
    }
    assert!(json(&out.join("operator.json"))["hermiticity_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn compare_tracks_the_classical_orbit() {
    let cfg = HARMONIC.replace("steps = 2000", "steps = 400");
    let (o, out) = run("compare", &cfg, "compare", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&out.join("comparison.csv"));
    let gap = header.iter().position(|h| h == "q_gap").unwrap();
    assert!(rows.iter().all(|r| r[gap] < 1e-6));
}

#[test]
fn oversized_dense_problem_reports_a_capability_error() {
    let cfg = r#"
[grid]
dim = 2
extent = [-6.0, 6.0]
points = 48

[window]
family = "planar"
m = 0
lambda = 0.5

[hamiltonian]
kind = "magnetic"
charge = 1.0
field = 0.5

[run]
t_final = 1.0
steps = 10

[run.initial]
q0 = [0.0, 0.0]
p0 = [0.0, 0.0]
sigma = 0.8
"#;
    let (o, _) = run("capability", cfg, "evolve", &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
