use std::path::Path;
use std::process::Command;

use qrdyn::config::{parse_key_values, ExperimentConfig, Kind};
use qrdyn::{cli_report, Error};

fn params(text: &str, out: &Path) -> std::collections::BTreeMap<String, String> {
    let mut p = parse_key_values(text).unwrap();
    p.insert("out".into(), out.to_string_lossy().into_owned());
    p
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = params("kind=orbit\nmap=power{d=2}\nbogus=1", dir.path());
    assert!(matches!(ExperimentConfig::from_params(None, p, Path::new(".")), Err(Error::Config(_))));
}

#[test]
fn unknown_kind_is_rejected() {
    assert!("julia".parse::<Kind>().is_err());
    let dir = tempfile::tempdir().unwrap();
    let p = params("kind=julia\nmap=power{d=2}", dir.path());
    assert!(ExperimentConfig::from_params(None, p, Path::new(".")).is_err());
}

#[test]
fn summary_verdict_is_conjunction_of_checks() {
    for text in [
        "kind=shell-bounds\nmap=power{d=2}",
        "kind=g-example\nK=1.5\ncounts=linear{c=40,m=8}",
        "kind=monotonicity\nmap=winding{K=2}",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_params(None, params(text, dir.path()), Path::new(".")).unwrap();
        let s = cli_report::run(&cfg).unwrap();
        assert!(!s.checks.is_empty());
        assert_eq!(s.pass, s.checks.iter().all(|c| c.pass));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["pass"], serde_json::Value::Bool(s.pass));
    }
}

fn qrdyn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qrdyn")).args(args).env("QRDYN_WORKERS", "2").output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = qrdyn(&["--out", out, "shell-bounds", "--map", "power{d=2}"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));
    assert!(dir.path().join("shell_bounds.csv").exists());

    let bad = qrdyn(&["--out", out, "orbit", "--map", "power{d=}"]);
    assert_eq!(bad.status.code(), Some(2));

    let gated = qrdyn(&["--out", out, "min-modulus", "--map", "conformal_exp"]);
    assert_eq!(gated.status.code(), Some(2));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basin.cfg");
    std::fs::write(&path, "kind=basin\nmap=power{d=2}\nres=16\n").unwrap();
    let out = dir.path().join("out");
    let r = qrdyn(&["--out", out.to_str().unwrap(), "run", path.to_str().unwrap(), "--res", "8"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let pgm = std::fs::read(out.join("basin.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
    assert_eq!(pgm.len(), b"P5\n8 8\n255\n".len() + 64);
}

#[test]
fn catalog_lists_every_family() {
    let r = qrdyn(&["catalog"]);
    let text = String::from_utf8_lossy(&r.stdout);
    for fam in ["winding", "power", "radial_stretch", "stretch_square", "pure_annulus_power", "g_example", "conformal_exp"] {
        assert!(text.contains(fam), "{fam}");
    }
}
