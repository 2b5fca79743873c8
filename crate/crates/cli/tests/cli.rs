//! End-to-end runs of the `conekit` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn conekit(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conekit"));
    cmd.args(args).env_remove("CONEKIT_THREADS");
    if let Some(t) = threads {
        cmd.env("CONEKIT_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn param(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn validate_admissible_params_reports_all_pass() {
    let o = conekit(&["validate", "--params", &param("bru_s3.json"), "--format", "json"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn validate_broken_params_exits_one_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = conekit(&["validate", "--params", &param("broken_s3.json"), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let report = std::fs::read_to_string(&out).unwrap();
    assert!(report.starts_with("check,passed,samples,worst,detail\n"));
    assert!(report.lines().any(|l| l.starts_with("inward_drift,false")));
}

#[test]
fn riccati_both_methods_agree_to_1e_8() {
    let o = conekit(
        &["riccati", "--params", &param("bru_s3.json"), "--u", "identity", "--t", "1", "--method", "both"],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "max_error").unwrap();
    let mut rows = 0;
    for line in lines {
        let err: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(err < 1e-8, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 21);
}

#[test]
fn rank_one_laplace_is_one_half() {
    let o = conekit(
        &["laplace", "--delta", "2", "--alpha", "identity", "--t", "0.5", "--x", "zero", "--u", "identity"],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[0] - 0.5).abs() < 1e-15);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let sim = ["simulate", "--params", &param("mixed_s2.json"), "--t", "1", "--steps", "50", "--paths", "40", "--seed", "7"];
    let a = conekit(&sim, None);
    let b = conekit(&sim, Some("1"));
    let c = conekit(&sim, Some("3"));
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let ex = ["examples", "vinberg", "--steps", "20", "--paths", "30", "--seed", "3"];
    assert_eq!(conekit(&ex, Some("1")).stdout, conekit(&ex, Some("4")).stdout);
    let sample = ["sample", "--algebra", "sym:2", "--delta", "2.5", "--t", "1", "--x", "identity", "--paths", "50"];
    assert_eq!(conekit(&sample, None).stdout, conekit(&sample, Some("2")).stdout);
}

#[test]
fn outputs_have_headers_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("paths.csv");
    let o = conekit(
        &["simulate", "--params", &param("bru_s2.json"), "--t", "1", "--steps", "10", "--paths", "3", "--record", "final", "--out"],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "--out without a value is a usage error");
    let o = conekit(
        &[
            "simulate", "--params", &param("bru_s2.json"), "--t", "1", "--steps", "10", "--paths", "3", "--record", "final",
            "--out", out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "path_id,t,coord_1,coord_2,coord_3,min_eigen");
    assert_eq!(csv.lines().count(), 1 + 3 * 2);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("paths.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["library_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["algebra"].as_str().unwrap().starts_with("sym:2"));
    assert_eq!(manifest["config"]["command"], "simulate");
    assert_eq!(manifest["config"]["paths"], 3);
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let o = conekit(
        &["examples", "vinberg", "--steps", "15", "--paths", "5", "--z2=-0.25,1.5", "--seed", "11", "--out", first.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("first.csv.manifest.json")).unwrap()).unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, serde_json::to_string_pretty(&manifest["config"]).unwrap()).unwrap();

    let second = dir.path().join("second.csv");
    let o = conekit(&["--config", config.to_str().unwrap(), "--out", second.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    let again: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("second.csv.manifest.json")).unwrap()).unwrap();
    let mut expected = manifest["config"].clone();
    expected["out"] = second.to_str().unwrap().into();
    assert_eq!(again["config"], expected);

    // Command-line flags override the document.
    let third = dir.path().join("third.json");
    let o = conekit(
        &["--config", config.to_str().unwrap(), "--paths", "2", "--format", "json", "--out", third.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&third).unwrap()).unwrap();
    assert_eq!(v["paths"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_config_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"algebra\": {\"kind\": \"SymMatrix\", \"size\": 2},\n \"alpha\": [1, 1, \"x\"]}").unwrap();
    let o = conekit(&["validate", "--params", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("alpha[2]"), "{err}");

    std::fs::write(&bad, "{\"command\": \"laplace\", \"delta\": 2, \"tt\": 1}").unwrap();
    let o = conekit(&["--config", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(conekit(&["no-such-command"], None).status.code(), Some(2));
    assert_eq!(conekit(&["selftest", "--only", "13"], None).status.code(), Some(2));
    assert_eq!(conekit(&["laplace", "--algebra", "oct:4", "--delta", "2"], None).status.code(), Some(2));
}

#[test]
fn selftest_runs_selected_criteria() {
    let o = conekit(&["selftest", "--only", "2,9"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("PASS [ 2]") && text.contains("PASS [ 9]"), "{text}");
    assert!(text.contains("2 of 2 criteria passed"));
}
