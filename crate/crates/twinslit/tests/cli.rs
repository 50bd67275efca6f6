use std::process::Command;

use twinslit::config::ScenarioConfig;

fn twinslit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_twinslit")).args(args).output().expect("binary runs")
}

#[test]
fn validate_echoes_a_config_that_parses_back() {
    let out = twinslit(&["validate", "--preset", "circle-upper"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ScenarioConfig::parse(&text).unwrap(), ScenarioConfig::preset("circle-upper").unwrap());
}

#[test]
fn config_errors_exit_2_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "# pump\npump.waist_um = 75\npump.order_y = two\n").unwrap();
    let out = twinslit(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("pump.order_y"), "{err}");
}

#[test]
fn bad_overrides_and_presets_exit_2() {
    assert_eq!(twinslit(&["cuts", "--grid", "500"]).status.code(), Some(2));
    assert_eq!(twinslit(&["validate", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(twinslit(&["validate", "--grid", "64"]).status.code(), Some(2), "grid too coarse for the slits");
}

#[test]
fn numerical_and_io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tilt.cfg");
    std::fs::write(&path, "crystal.axis_angle_deg = 20\n").unwrap();
    let out = twinslit(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = twinslit(&["cuts", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cuts_writes_outputs_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cuts");
    let out = twinslit(&["cuts", "--out", out_dir.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "cuts");
    let names: Vec<&str> =
        manifest["outputs"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["config.txt", "tomographic_cuts.csv", "cuts.json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["upper"]["count"], 2);
}
