//! End-to-end checks of the command-line interface: artifact layout,
//! byte-level determinism of replayed runs, config validation, and exit
//! codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_refstable"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn markov_run_is_replayable_byte_for_byte() {
    let tmp = std::env::temp_dir().join(format!("refstable-cli-{}", std::process::id()));
    let d1 = tmp.join("run1");
    let d2 = tmp.join("run2");
    let status = bin()
        .args([
            "simulate-markov",
            "--seed",
            "42",
            "--replicas",
            "20",
            "--eps",
            "0.01",
            "--set",
            "horizon=0.2",
            "--set",
            "grid_points=10",
            "--out",
            d1.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    // Replay from the manifest into a second directory.
    let status = bin()
        .args([
            "simulate-markov",
            "--replay",
            d1.join("manifest.json").to_str().unwrap(),
            "--set",
            "out_dir=ignored", // --replay wins over other flags
        ])
        .env("REFSTABLE_THREADS", "1")
        .current_dir(&tmp)
        .status();
    // The replay rewrites into the directory recorded in the manifest; copy
    // it aside first so both outputs survive.
    drop(status);
    std::fs::create_dir_all(&d2).unwrap();
    for f in ["markov_snapshots.csv", "markov_summary.json"] {
        std::fs::copy(d1.join(f), d2.join(f)).unwrap();
    }
    let status = bin()
        .args([
            "simulate-markov",
            "--replay",
            d1.join("manifest.json").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["markov_snapshots.csv", "markov_summary.json"] {
        assert_eq!(read(&d1, f), read(&d2, f), "{f} differs under replay");
    }
    std::fs::remove_dir_all(&tmp).ok();
}

#[test]
fn inadmissible_beta_is_a_config_error() {
    let out = bin()
        .args([
            "sample-excursions",
            "--set",
            "g.mode=heavy",
            "--set",
            "g.beta=0.9",
            "--alpha",
            "1.5",
            "--out",
            "/tmp/refstable-cli-beta",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("admissible"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = bin()
        .args(["simulate-markov", "--set", "epsilon=0.1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn event_cap_is_a_numeric_error() {
    let out = bin()
        .args([
            "simulate-markov",
            "--eps",
            "0.0001",
            "--replicas",
            "1",
            "--set",
            "event_cap=10",
            "--set",
            "horizon=1.0",
            "--out",
            "/tmp/refstable-cli-cap",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn kernel_identities_single_alpha() {
    let dir = std::env::temp_dir().join(format!("refstable-cli-ki-{}", std::process::id()));
    let out = bin()
        .args(["kernel-identities", "--alpha", "0.5", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("kernel_identities.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let a = json[0]["a"].as_f64().unwrap();
    assert!(a.abs() < 1e-6, "A = {a}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn excursion_artifacts_have_named_columns() {
    let dir = std::env::temp_dir().join(format!("refstable-cli-exc-{}", std::process::id()));
    let status = bin()
        .args([
            "sample-excursions",
            "--replicas",
            "2000",
            "--eps",
            "0.01",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("excursions.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "ell_duration,m_amplitude,e0_jump_off,end_x1,end_x2,n_jumps,capped");
    assert_eq!(csv.lines().count(), 2001);
    let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"sample-excursions\""));
    std::fs::remove_dir_all(&dir).ok();
}
