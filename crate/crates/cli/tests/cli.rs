use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use atma_core::link::read_waveform;
use tempfile::TempDir;

fn atma(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{sub}.cfg"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_atma"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn csv(dir: &Path, stem: &str) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("out").join(format!("{stem}.csv")))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn table2_reference_checks_pass() {
    let dir = TempDir::new().unwrap();
    let out = atma(dir.path(), "table2", "golden = A=64 R == 1/80\n", &[]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.matches("PASS").count(), 5, "{stdout}");
    let rows = csv(dir.path(), "table2");
    assert_eq!(&rows[0][..6], ["N", "A", "O_tau", "d", "K_b", "N_cp"]);
    assert_eq!(rows.len(), 5);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/table2.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(sidecar["golden"].as_array().unwrap().len(), 5);
}

#[test]
fn heatmap_contour() {
    let dir = TempDir::new().unwrap();
    let out = atma(dir.path(), "fig9-heatmap", "n = 16, 32\na = 16, 32\n", &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(dir.path(), "fig9-heatmap");
    let meets: Vec<&str> = rows[1..].iter().map(|r| r[7].as_str()).collect();
    assert_eq!(meets, ["0", "0", "0", "1"]);
}

#[test]
fn empty_axis_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let out = atma(dir.path(), "aclr-sweep", "a =\n", &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv(dir.path(), "aclr-sweep").len(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = "n = 4\na = 4, 8\no_tau = 1, 2\nd = all\nk_b = 16\nsnr_db = 20\n";
    atma(dir.path(), "link-sim", cfg, &["--seed", "3", "--jobs", "2"]);
    let first = fs::read(dir.path().join("out/link-sim.csv")).unwrap();
    let json = fs::read(dir.path().join("out/link-sim.json")).unwrap();
    atma(dir.path(), "link-sim", cfg, &["--seed", "3", "--jobs", "2"]);
    assert_eq!(first, fs::read(dir.path().join("out/link-sim.csv")).unwrap());
    assert_eq!(json, fs::read(dir.path().join("out/link-sim.json")).unwrap());
}

#[test]
fn parse_errors_exit_2_with_location() {
    let dir = TempDir::new().unwrap();
    let out = atma(dir.path(), "aclr-sweep", "n = 4\n\na = four\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3, field `a`"), "{stderr}");
    let out = atma(dir.path(), "run", "n = 4\n", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_golden_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = atma(dir.path(), "aclr-sweep", "n = 4\na = 4\ngolden = * aclr_db >= 40\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn violations_are_annotated_or_fatal_in_strict_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = "n = 4\na = 8\no_tau = 2\nk_b = 6\n";
    let out = atma(dir.path(), "evm-sweep", cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(dir.path(), "evm-sweep");
    assert!(!rows[1].last().unwrap().is_empty());
    let out = atma(dir.path(), "evm-sweep", &format!("{cfg}strict = true\n"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exported_waveform_round_trips() {
    let dir = TempDir::new().unwrap();
    let out =
        atma(dir.path(), "export-waveform", "n = 4\na = 4\nk_b = 8\nsample_rate = 1e6\nupsample = 4\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = fs::read(dir.path().join("out/export-waveform.bin")).unwrap();
    let (rate, samples) = read_waveform(&mut bytes.as_slice()).unwrap();
    assert_eq!(rate, 4e6);
    assert_eq!(samples.len(), 4 * 32);
    let rows = csv(dir.path(), "export-waveform");
    assert_eq!(rows[1][8], "128");
}

#[test]
fn run_dispatches_on_experiment_key() {
    let dir = TempDir::new().unwrap();
    let out = atma(dir.path(), "run", "experiment = oracle-check\nn = 2, 4\na = 2\n", &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(dir.path(), "oracle-check");
    assert!(rows[1..].iter().all(|r| r[8] == "1"));
}
