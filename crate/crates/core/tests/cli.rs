use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn typlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_typlab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("TYPLAB_SEED")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn doubling_density_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = typlab(
        &[
            "density", "--family", "beta", "--a", "2.0", "--bins", "4096",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 1.0).abs() <= 1e-8);
        rows += 1;
    }
    assert_eq!(rows, 4096);
    let report = json(&dir.path().join("density.json"));
    assert_eq!(report["report"]["variation"]["Cv"], 12.0);
    assert!(!dir.path().join("density.csv.partial").exists());
}

#[test]
fn transversality_of_symmetric_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = typlab(
        &[
            "transversality",
            "--family",
            "skewtent",
            "--path",
            "symmetric",
            "--a0",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("transversality.json"));
    assert_eq!(r["report"]["j0_found"], 3);
    assert_eq!(r["report"]["Lambda0"], 1.0);
    assert_eq!(r["pass"], true);
}

#[test]
fn period_two_point_fails_check_i() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"family": {"kind": "markov", "param_interval": [0.2, 0.8]}, "x": {"type": "markov_period_two"}, "grid_size": 40}"#,
    )
    .unwrap();
    let out = typlab(&["check-i", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let r = json(&dir.path().join("check_i.json"));
    assert_eq!(r["pass"], false);
    assert_eq!(r["report"]["pass"], false);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = typlab(&["sweep", "--family", "markov", "--bins", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bins"));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"family": "markov", "colour": "blue"}"#).unwrap();
    let out = typlab(
        &["density", "--config", cfg.to_str().unwrap(), "--a", "0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = typlab(&["density", "--family", "markov"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = typlab(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    fs::write(&cfg, r#"{"command": "orbit", "family": "markov"}"#).unwrap();
    let out = typlab(
        &["density", "--config", cfg.to_str().unwrap(), "--a", "0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn serial_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--family",
        "beta",
        "--n",
        "20000",
        "--bins",
        "256",
        "--points",
        "4",
        "--seed",
        "3",
        "--threshold",
        "0.05",
    ];
    let mut serial = args.to_vec();
    serial.push("--serial");
    assert_eq!(typlab(&serial, a.path()).status.code(), Some(0));
    assert_eq!(typlab(&args, b.path()).status.code(), Some(0));
    let x = fs::read(a.path().join("sweep.csv")).unwrap();
    let y = fs::read(b.path().join("sweep.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.contains("# seed: 3"));
    assert!(text.contains("# version: "));
    assert!(text.contains("# config_hash: "));
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = typlab(
        &[
            "kneading",
            "--family",
            "skewtent",
            "--path",
            "increasing",
            "--depth",
            "20",
            "--points",
            "30",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("kneading.csv")).unwrap();
    let echoed = csv
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .unwrap();
    let cfg = typlab::cli::parse_config(echoed).unwrap();
    assert_eq!(cfg.normalized_json(), echoed);
    let hash = csv
        .lines()
        .find_map(|l| l.strip_prefix("# config_hash: "))
        .unwrap();
    assert_eq!(cfg.hash(), hash);
    assert_eq!(cfg.depth, 20);
}

#[test]
fn environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_typlab"))
        .args(["orbit", "--family", "beta", "--x", "1"])
        .arg("--out")
        .arg(dir.path())
        .env("TYPLAB_A", "2.5")
        .env("TYPLAB_JMAX", "3")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 5);
    assert!(body[2].starts_with("1,5.0000000000000000e-1,1.0000000000000000e0"));
}

#[test]
fn check_iii_passes_on_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out = typlab(
        &[
            "check-iii",
            "--family",
            "beta",
            "--a1",
            "2.2",
            "--a2",
            "2.4",
            "--depth",
            "6",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("check_iii.json"));
    assert_eq!(r["report"]["unmatched"], 0);
}
