//! End-to-end runs of the `leray` binary.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn leray(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_leray")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn statuses(v: &Value) -> Vec<String> {
    v["reports"].as_array().unwrap().iter().map(|r| r["status"].as_str().unwrap().to_string()).collect()
}

#[test]
fn zero_force_solve_and_verify_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.conf", "lambda = 1\nforce.family = none\ndisk.radius = 8\nverify.good_circle_fields = 50\n");
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    assert_eq!(leray(&["solve", "--config", &cfg, "--out", &out_s]).0, 0);
    assert!(out.join("solution").join("disk.psi.llf").exists());
    let (code, err) = leray(&["verify", "--config", &cfg, "--out", &out_s]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out.join("verify.json"));
    assert_eq!(v["tool"], "leray");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
    for r in v["reports"].as_array().unwrap() {
        let s = r["status"].as_str().unwrap();
        assert!(matches!(s, "pass" | "not_applicable" | "measured"), "{r}");
        if r["name"] != "good_circle_random" && r["name"] != "log_mean" {
            assert!(r["lhs"].as_f64().unwrap() < 1e-10, "{r}");
        }
    }
}

#[test]
fn tiny_iteration_budget_is_an_operational_error_with_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tiny.conf",
        "force.family = bump_dipole\nforce.amplitude = 1\nsolver.max_iter = 1\nsolver.continuation_steps = 0\n",
    );
    let out = dir.path().join("out");
    let (code, err) = leray(&["solve", "--config", &cfg, "--out", &out.to_string_lossy()]);
    assert_eq!(code, 1);
    assert!(err.contains("did not converge"), "{err}");
    let v = json(&out.join("solve.json"));
    assert!(!v["error"]["history"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_config_names_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "lambda = 1\nforce.amplitude = abc\n");
    let (code, err) = leray(&["solve", "--config", &cfg, "--out", &dir.path().join("o").to_string_lossy()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2") && err.contains("force.amplitude"), "{err}");
    let cfg = write_config(dir.path(), "unknown.conf", "lambda = 1\ndisk.size = 3\n");
    let (code, err) = leray(&["solve", "--config", &cfg, "--out", &dir.path().join("o").to_string_lossy()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2") && err.contains("disk.size"), "{err}");
}

#[test]
fn unknown_check_name_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = leray(&["verify", "--checks", "nonsense", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(code, 1);
    assert!(err.contains("nonsense"), "{err}");
}

#[test]
fn small_data_pipeline_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s1.conf",
        "lambda = 1\nforce.family = bump_net\nforce.amplitude = 0.05\ninvade.schedule = 2,4,8,16,32\nverify.good_circle_fields = 100\n",
    );
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    for cmd in ["invade", "verify", "crosscheck"] {
        let (code, err) = leray(&[cmd, "--config", &cfg, "--out", &out_s, "--seed", "11"]);
        assert_eq!(code, 0, "{cmd}: {err}");
    }
    let cross = json(&out.join("crosscheck.json"));
    assert_eq!(cross["reports"][0]["name"], "uniqueness_crosscheck");
    assert_eq!(cross["reports"][0]["status"], "pass");
    assert!(cross["fixed_point"]["contraction"].as_f64().unwrap() < 1.0);
    assert!(out.join("oseen_ledger.csv").exists());
    let first = std::fs::read(out.join("verify.json")).unwrap();
    assert_eq!(leray(&["verify", "--config", &cfg, "--out", &out_s, "--seed", "11"]).0, 0);
    assert_eq!(first, std::fs::read(out.join("verify.json")).unwrap());
    assert_eq!(json(&out.join("verify.json"))["seed"], 11);

    assert_eq!(leray(&["report", "--out", &out_s]).0, 0);
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("source,name,status,lhs,rhs,ratio,slack,digest\n"));
    assert!(!csv.contains('\r'));
    assert!(csv.lines().any(|l| l.starts_with("crosscheck,uniqueness_crosscheck,pass,")));
    assert!(statuses(&json(&out.join("invade.json"))).iter().all(|s| s != "fail"));
}

#[test]
fn diverging_fixed_point_keeps_its_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "big.conf",
        "force.family = bump_net\nforce.amplitude = 400\noseen.half_width = 4\noseen.spacing = 0.25\noseen.max_iter = 30\noseen.ramp_steps = 3\n",
    );
    let out = dir.path().join("out");
    let (code, _) = leray(&["oseen", "--config", &cfg, "--out", &out.to_string_lossy()]);
    assert_eq!(code, 1);
    let v = json(&out.join("oseen.json"));
    assert!(!v["error"]["history"].as_array().unwrap().is_empty());
    assert!(!v["ramp"].as_array().unwrap().is_empty());
}

#[test]
fn crosscheck_is_not_applicable_when_the_fixed_point_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "big.conf",
        "force.family = bump_net\nforce.amplitude = 400\ninvade.schedule = 2,4\noseen.half_width = 4\noseen.spacing = 0.25\noseen.max_iter = 30\ncrosscheck.coarse = false\n",
    );
    let out = dir.path().join("out");
    let (code, err) = leray(&["crosscheck", "--config", &cfg, "--out", &out.to_string_lossy()]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out.join("crosscheck.json"));
    assert_eq!(v["reports"][0]["status"], "not_applicable");
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.conf",
        "force.family = bump_dipole\nsweep.lambda = 1,2\nsweep.amplitude = 0.1,0.3\ninvade.schedule = 2,4,8\ngrid.max_stretch = 1.02\n",
    );
    let out = dir.path().join("out");
    let (code, err) = leray(&["sweep", "--config", &cfg, "--out", &out.to_string_lossy(), "--workers", "2"]);
    assert!(code == 0 || code == 2, "{err}");
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let v = json(&out.join("sweep.json"));
    assert_eq!(v["bounds"]["points"].as_array().unwrap().len(), 4);
}
