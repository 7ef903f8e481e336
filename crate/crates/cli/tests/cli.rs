use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gho_core::classical::Oscillator;
use gho_core::params::Scenario;
use gho_core::propagator::caustic_times;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn gho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gho")).args(args).output().unwrap()
}

fn gho_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    let out = gho(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Data rows of a CSV written by the tool, parsed as numbers.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn free_kernel_scan_has_441_rows() {
    let dir = tempfile::tempdir().unwrap();
    let free = scenario("free.toml");
    gho_in(dir.path(), &["kernel-scan", "--scenario", free.to_str().unwrap(), "--grid", "-5,5,21", "--times", "0,1"]);
    let table = rows(&dir.path().join("kernel_scan.csv"));
    assert_eq!(table.len(), 441);
    // |K| = (2 pi t)^(-1/2) everywhere for the free particle
    for r in &table {
        assert!((r[6] - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-10);
    }
}

#[test]
fn negative_mass_is_an_input_error() {
    let bad = scenario("negative_mass.toml");
    let out = gho(&["verify", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty(), "no check may run");
    assert!(String::from_utf8_lossy(&out.stderr).contains("validation"));
}

#[test]
fn malformed_flags_are_input_errors() {
    let sho = scenario("sho.toml");
    let s = sho.to_str().unwrap();
    assert_eq!(gho(&["modes", "--scenario", s, "--grid", "1,2"]).status.code(), Some(2));
    assert_eq!(gho(&["verify", "--scenario", s, "--tol", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(gho(&["verify", "--scenario", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(gho(&["kernel-scan", "--scenario", s, "--times", "0,3.141592653589793"]).status.code(), Some(2));
}

#[test]
fn sho_modes_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let sho = scenario("sho.toml");
    gho_in(dir.path(), &["modes", "--scenario", sho.to_str().unwrap(), "--modes", "0..3", "--grid", "-10,10,2001"]);
    for n in 0..=3 {
        let table = rows(&dir.path().join(format!("mode_n{n}_t000.csv")));
        assert_eq!(table.len(), 2001);
        let dx = table[1][0] - table[0][0];
        let inner: f64 = table[1..table.len() - 1].iter().map(|r| r[3]).sum();
        let norm = dx * (inner + 0.5 * (table[0][3] + table[table.len() - 1][3]));
        assert!((norm - 1.0).abs() < 1e-8, "n = {n}: {norm}");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let sho = scenario("driven.toml");
    let args = ["evolve", "--scenario", sho.to_str().unwrap(), "--grid", "-12,12,512", "--times", "0,0.5,1"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    gho_in(a.path(), &args);
    gho_in(b.path(), &args);
    for k in 0..3 {
        let name = format!("packet_{k:03}.csv");
        let (x, y) = (fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn invariant_series_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario("parametric.toml");
    gho_in(dir.path(), &["invariant", "--scenario", p.to_str().unwrap(), "--grid", "-12,12,2048", "--times", "0,1,2,3,4,5"]);
    let table = rows(&dir.path().join("invariant.csv"));
    assert_eq!(table.len(), 6);
    let values: Vec<f64> = table.iter().map(|r| r[1]).collect();
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread / values[0].abs() < 1e-5, "{values:?}");
}

#[test]
fn sho_verify_passes() {
    let sho = scenario("sho.toml");
    let out = gho(&["verify", "--scenario", sho.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().count() > 15);
    for line in text.lines() {
        assert!(line.starts_with("CHECK ") && line.ends_with(" PASS"), "{line}");
    }
}

#[test]
fn caustic_in_composition_triple_is_skipped() {
    let path = scenario("parametric.toml");
    let s = Scenario::from_toml(&fs::read_to_string(&path).unwrap()).unwrap();
    let osc = Oscillator::solve(&s).unwrap();
    let t_star = caustic_times(&osc.basis, 0.0).unwrap().times[0];
    let times = format!("0,{t_star:?},4.5");
    let out = gho(&["verify", "--scenario", path.to_str().unwrap(), "--times", &times]);
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.starts_with("CHECK kernel_composition ")).unwrap();
    assert!(line.contains("SKIP(caustic"), "{line}");
    assert!(text.lines().filter(|l| l.ends_with(" PASS")).count() > 15, "{text}");
    assert_eq!(out.status.code(), Some(0), "{text}");
}

#[test]
fn tolerance_override_can_fail_a_check() {
    let sho = scenario("sho.toml");
    let out = gho(&["verify", "--scenario", sho.to_str().unwrap(), "--tol", "kernel_delta=1e-9"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1));
    assert!(text.contains("CHECK kernel_delta value=") && text.contains("tol=1e-9 FAIL"), "{text}");
}

#[test]
fn bundled_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let parsed = Scenario::from_toml(&fs::read_to_string(&path).unwrap());
        let bad = path.file_name().unwrap() == "negative_mass.toml";
        assert_eq!(parsed.is_err(), bad, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 7);
}
