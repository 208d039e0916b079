use std::path::Path;
use std::process::Command;

use seqcmc_bench::output::{CSV_FILE, JSON_FILE, METADATA_FILE};

fn seqcmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqcmc"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const TINY_LINEAR: &str = r#"{
  "name": "tiny",
  "horizon": 4,
  "runs": 2,
  "timing": "disabled",
  "scenario": {
    "kind": "single",
    "model": { "type": "linear", "a": 0.9, "q": 10.0, "r": 1.0 },
    "filters": [
      { "filter": "kalman", "outputs": ["mean"] },
      { "filter": "sir", "particles": 20, "outputs": ["crude", "cmc"] }
    ]
  }
}"#;

#[test]
fn validate_accepts_shipped_scenarios() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = seqcmc().arg("validate").arg("--config").arg(&path).output().unwrap();
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", r#"{ "name": "x", "horizon": 3 "#);
    let out = seqcmc().args(["single", "--out"]).arg(tmp.path()).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_field_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let body = TINY_LINEAR.replace("\"runs\": 2,", "\"runs\": 2, \"particels\": 5,");
    let cfg = write(tmp.path(), "typo.json", &body);
    let out = seqcmc().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_value_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.json", &TINY_LINEAR.replace("\"horizon\": 4", "\"horizon\": 0"));
    let out = seqcmc().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kind_mismatch_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "tiny.json", TINY_LINEAR);
    let out = seqcmc().args(["jmss", "--out"]).arg(tmp.path()).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join(CSV_FILE).exists());
}

#[test]
fn missing_output_dir_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "tiny.json", TINY_LINEAR);
    let out = seqcmc().arg("single").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_run_writes_results_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "tiny.json", TINY_LINEAR);
    let dest = tmp.path().join("out");
    let out = seqcmc().arg("single").arg("--config").arg(&cfg).arg("--out").arg(&dest).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dest.join(CSV_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,estimator,mse,cost_s,efficiency");
    // Four steps of three estimators.
    assert_eq!(lines.count(), 12);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dest.join(METADATA_FILE)).unwrap()).unwrap();
    assert_eq!(meta["seeds"], serde_json::json!([0, 1]));
}

#[test]
fn seed_and_format_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "tiny.json", TINY_LINEAR);
    let out = seqcmc()
        .arg("single")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .args(["--seeds", "7,9,11", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join(JSON_FILE)).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["seeds"], serde_json::json!([7, 9, 11]));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 12);
    assert!(doc["rows"][0]["cost_s"].is_null());
}
