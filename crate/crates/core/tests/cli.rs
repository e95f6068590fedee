use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adiavac"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn invariants_on_static_config_pass() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["run", "--config"])
        .arg(config("static.toml"))
        .args(["--suite", "invariants", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let m = manifest(dir.path());
    assert_eq!(m["passed"], true);
    let checks = m["suites"][0]["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn massless_column_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["run", "--config"])
        .arg(config("reference.toml"))
        .args(["--suite", "frequencies", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("frequencies_massless.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,omega_sq,omega_1_sq,closed_form,rel_err");
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // reference background: H = 1 at t0 = 0
        let expect = v[0] * (v[0] + 2.0) - 2.0;
        assert!(((v[2] - expect) / expect).abs() < 1e-12, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn negative_mass_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("static.toml")).unwrap().replace("mass = 1.0", "mass = -1.0");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    for args in [vec!["validate", "--config"], vec!["run", "--suite", "frequencies", "--config"]] {
        let out = bin().args(&args).arg(&path).current_dir(dir.path()).output().unwrap();
        assert_ne!(out.status.code(), Some(0));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("invalid config"), "{err}");
        assert!(err.contains("mass"), "{err}");
    }
    assert!(!dir.path().join("adiavac-out").exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("static.toml")).unwrap() + "\nbogus = 1\n";
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let st = bin().args(["validate", "--config"]).arg(&path).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn validate_accepts_bundled_configs() {
    for name in ["static.toml", "reference.toml", "detector.toml"] {
        let st = bin().args(["validate", "--config"]).arg(config(name)).status().unwrap();
        assert_eq!(st.code(), Some(0), "{name}");
    }
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["run", "--config"])
        .arg(config("reference.toml"))
        .args(["--suite", "bogoliubov", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let m = manifest(dir.path());
    assert_eq!(m["suite"], "bogoliubov");
    assert_eq!(m["config"]["mass"], 1.0);
    assert!(m["code_version"].as_str().is_some());
    let files = m["files"].as_array().unwrap();
    let mut listed: Vec<String> = files.iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    for f in files {
        let bytes = std::fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), f["sha256"].as_str().unwrap());
    }
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn repeated_runs_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let st = bin()
            .args(["run", "--config"])
            .arg(config("reference.toml"))
            .args(["--suite", "particle_numbers", "--out"])
            .arg(d.path())
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["files"], mb["files"]);
}
