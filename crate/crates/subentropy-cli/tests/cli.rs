//! End-to-end CLI checks: exit codes, config handling, and byte-identical
//! reproducibility modulo the timestamp field.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_subentropy"));
    assert!(p.exists(), "binary missing at {p:?}");
    p = p.canonicalize().unwrap();
    p
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("subentropy-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("\"timestamp\"") && !l.contains("generated_at"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn duality_runs_and_reproduces_byte_identically() {
    let dir = tmpdir("duality");
    let out1 = dir.join("a.json");
    let out2 = dir.join("b.json");
    for out in [&out1, &out2] {
        let status = Command::new(bin())
            .args([
                "duality",
                "--algebra",
                "diagonal:2",
                "--states",
                "2",
                "--eps",
                "0,0.1",
                "--alpha",
                "1,2",
                "--seed",
                "99",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = strip_timestamp(&std::fs::read_to_string(&out1).unwrap());
    let b = strip_timestamp(&std::fs::read_to_string(&out2).unwrap());
    assert_eq!(a, b, "same seed must reproduce identical output");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tmpdir("config");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"algebra": "trivial:2", "state": "random:3", "eps": [0.1], "nmax": 2, "states": 1}"#,
    )
    .unwrap();
    let out = dir.join("out.csv");
    let status = Command::new(bin())
        .args([
            "aep",
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# task=aep"));
    assert!(text.contains("quantity,value_bits,n,epsilon,route,certificate_gap"));
}

#[test]
fn config_errors_exit_two() {
    // unknown algebra preset
    let status = Command::new(bin())
        .args(["duality", "--algebra", "nonsense:9"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    // invalid epsilon
    let status = Command::new(bin())
        .args(["duality", "--algebra", "diagonal:2", "--eps", "1.5"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    // missing config file
    let status = Command::new(bin())
        .args(["duality", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn presets_listing() {
    let out = Command::new(bin()).arg("presets").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("diagonal:D"));
    assert!(text.contains("swap-invariant"));
}

#[test]
fn empty_eps_uses_defaults() {
    let dir = tmpdir("defaults");
    let out = dir.join("out.json");
    let status = Command::new(bin())
        .args([
            "axioms",
            "--algebra",
            "diagonal:2",
            "--nmax",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("axiom1_max_violation"));
}
