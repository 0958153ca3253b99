use std::fs;
use std::process::Command;

fn sigflow() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sigflow"));
    c.env_remove("SIGFLOW_OUT");
    c
}

const SCENARIO: &str = r#"
[metric]
a = "-y"
b = "0"
c = "1"
[region]
x = [-1.0, 1.0]
y = [-0.5, 0.5]
[[task]]
kind = "classify-curve"
at = [0.0, 0.0]
file = "report.csv"
[[task]]
kind = "portrait"
at = [0.0, 0.0]
leaves = [-0.04, 0.0, 0.04]
radius = 1.0
admissible = false
file = "z.svg"
"#;

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, SCENARIO).unwrap();
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let st = sigflow().arg("run").arg(&path).arg("--out").arg(&out).status().unwrap();
        assert_eq!(st.code(), Some(0));
        outputs.push((fs::read(out.join("report.csv")).unwrap(), fs::read(out.join("z.svg")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn env_var_names_the_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, SCENARIO).unwrap();
    let out = dir.path().join("from-env");
    let st = sigflow().arg("run").arg(&path).env("SIGFLOW_OUT", &out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("report.csv").exists());
}

#[test]
fn malformed_expression_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, SCENARIO.replace("\"-y\"", "\"-y * (\"")).unwrap();
    let out = dir.path().join("out");
    let o = sigflow().arg("run").arg(&path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("metric.a"));
    assert!(!out.exists());
}

#[test]
fn bad_tolerance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, SCENARIO).unwrap();
    let o = sigflow().args(["--tol", "wobble=1"]).arg("run").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, SCENARIO.replace("at = [0.0, 0.0]\nleaves", "at = [0.2, 0.3]\nleaves")).unwrap();
    let out = dir.path().join("out");
    let o = sigflow().arg("run").arg(&path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("report.csv").exists());
    assert!(!out.join("z.svg").exists());
}

#[test]
fn classify_prints_a_report_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    fs::write(&path, "[metric]\nomega = \"-1\"\neps = -1.0\n").unwrap();
    let o = sigflow().arg("classify").arg("--metric").arg(&path).args(["--at", "0,0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(3), Some("Ds"));
}

#[test]
fn verify_suites() {
    let o = sigflow().args(["verify", "--suite", "spectra", "--seed", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("[PASS]"));
    let o = sigflow().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
