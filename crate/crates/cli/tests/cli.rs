use std::path::Path;
use std::process::{Command, Output};

fn simo(args: &[&str], workers: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_simo"));
    cmd.args(args).current_dir(dir).env_remove("SIMO_WORKERS");
    if let Some(w) = workers {
        cmd.env("SIMO_WORKERS", w);
    }
    cmd.output().unwrap()
}

const SPEC: &str = r#"
name = "small"
detector = "tsa"
constellation = "qpsk"
n_rx = [20, 60]
t_coh = [8]
snr_db = [-6.0, 0.0]
trials = 200
seed = 11
"#;

#[test]
fn csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SPEC).unwrap();
    let one = simo(&["simulate", "small.toml", "-o", "one.csv"], Some("1"), dir.path());
    let three = simo(&["simulate", "small.toml", "-o", "three.csv"], Some("3"), dir.path());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert!(three.status.success(), "{}", String::from_utf8_lossy(&three.stderr));
    let a = std::fs::read(dir.path().join("one.csv")).unwrap();
    let b = std::fs::read(dir.path().join("three.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 5);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("three.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["workers"], 3);
    assert_eq!(manifest["rows"], 4);
    assert_eq!(manifest["specs"][0]["seed"], 11);
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_const.toml", SPEC.replace("\"qpsk\"", "\"8psk\"")),
        ("bad_key.toml", format!("{SPEC}bogus = 1\n")),
        ("bad_t.toml", SPEC.replace("t_coh = [8]", "t_coh = [1]")),
        ("bad_cm.toml", SPEC.replace("\"tsa\"", "\"sphere_cm\"").replace("\"qpsk\"", "\"16qam\"")),
    ];
    for (file, text) in cases {
        std::fs::write(dir.path().join(file), text).unwrap();
        let out = simo(&["simulate", file], None, dir.path());
        assert_eq!(out.status.code(), Some(2), "{file}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = simo(&["simulate", "small.toml"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(dir.path().join("small.toml"), SPEC).unwrap();
    let out = simo(&["simulate", "small.toml"], Some("many"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = simo(&["figure", "fig1"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_detects_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let ok = simo(&["verify"], None, dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(!String::from_utf8_lossy(&ok.stdout).contains("FAIL"));
    let bad = simo(&["verify", "--inject-fault", "0.1"], None, dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL cholesky_closed_form"));
}

#[test]
fn figure_runs_with_reduced_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = simo(&["figure", "fig8", "--trials", "2", "-o", "f.csv"], Some("2"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("fig8,")));
    assert!(dir.path().join("f.manifest.json").exists());
}
