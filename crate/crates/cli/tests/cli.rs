use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gabor-schauder"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn ordering_prints_lifted_prefix() {
    let out = bin().args(["ordering", "--decisions", "HV(HV)*", "--take", "4", "--lq", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "j,flat,m,n\n1,0,0,0\n2,1,0,0\n3,0,1,0\n4,1,1,0\n");
}

#[test]
fn analyze_orthonormal_config() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = bin().arg("analyze").arg(configs().join("orthonormal.json")).arg("--out").arg(&report).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "riesz-evidence");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["verdict"], "riesz-evidence");
}

#[test]
fn config_errors_exit_nonzero_and_math_failures_do_not() {
    let bad = bin().args(["example4", "--L", "2", "--poly", "x-0.5", "--exp", "1.5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let missing = bin().args(["analyze", "/nonexistent.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("oversampled.json");
    std::fs::write(
        &cfg,
        r#"{"lattice":{"p":1,"q":1,"L":2},"grid":{"Mx":16,"Ku":16},
            "windows":[{"pieces":[{"interval":[0,1],"poly":[1]}]},{"pieces":[{"interval":[0,1],"poly":[0,1]}]}]}"#,
    )
    .unwrap();
    let out = bin().arg("dual").arg(&cfg).arg("--range").arg("1").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("error"));
}

#[test]
fn zak_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("z.csv");
    let out = bin()
        .arg("zak")
        .arg(configs().join("window.json"))
        .args(["--mx", "8", "--ku", "8", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 64);
}
