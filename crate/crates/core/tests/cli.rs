use std::path::Path;
use std::process::Command;

fn satcomp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_satcomp")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", r#"{"p_max": "30 dBm", "k": 4}"#);
    let bad = write(dir.path(), "bad.json", r#"{"k": -1}"#);
    let typo = write(dir.path(), "typo.json", r#"{"kk": 3}"#);
    let (code, out, _) = satcomp(&["validate", "--scenario", &good]);
    assert_eq!(code, 0);
    assert!(out.contains("K=4"));
    let (code, _, err) = satcomp(&["validate", "--scenario", &bad]);
    assert_eq!(code, 1);
    assert!(err.contains("`k`"));
    assert_eq!(satcomp(&["validate", "--scenario", &typo]).0, 1);
}

#[test]
fn run_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.json", r#"{"k": 4, "l": 3, "m": 2, "n": 2, "seed": 5}"#);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let (code, _, err) = satcomp(&[
            "run", "--scenario", &sc, "--experiment", "custom", "--axis", "z_ms=80,120", "--seeds", "2",
            "--out", out.to_str().unwrap(), "--algorithms", "ao,ftp,ro",
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let a = std::fs::read_to_string(out_a.join("custom.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(out_b.join("custom.csv")).unwrap());
    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,algorithm,z_ms,point,trial,seed,xi_joules,feasible,wallclock_s,trace"
    );
    assert_eq!(lines.count(), 2 * 2 * 3);
    assert!(out_a.join("custom_summary.csv").exists());
}

#[test]
fn run_rejects_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.json", "{}");
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(satcomp(&["run", "--scenario", &sc, "--experiment", "nope", "--seeds", "1", "--out", o]).0, 1);
    assert_eq!(satcomp(&["run", "--scenario", &sc, "--experiment", "custom", "--seeds", "0", "--out", o]).0, 1);
    assert_eq!(
        satcomp(&["run", "--scenario", &sc, "--experiment", "custom", "--seeds", "1", "--out", o, "--algorithms", "xyz"]).0,
        1
    );
    assert_eq!(
        satcomp(&["run", "--scenario", &sc, "--experiment", "node_sweep", "--axis", "k=3", "--seeds", "1", "--out", o]).0,
        1
    );
}

#[test]
fn oracle_suites() {
    let (code, out, _) = satcomp(&["oracle", "--check", "bessel"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("PASS bessel"));
    assert_eq!(satcomp(&["oracle", "--check", "power"]).0, 0);
    assert_eq!(satcomp(&["oracle", "--check", "offload"]).0, 0);
    assert_eq!(satcomp(&["oracle", "--check", "unknown"]).0, 1);
}
