use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
        .display()
        .to_string()
}

fn iupc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iupc"))
        .args(args)
        .env_remove("IUPC_LOOP_BOUND")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

#[test]
fn identify_reports_statuses() {
    let out = iupc(&[
        "identify",
        &fixture("constraints/fig1.iupc"),
        "--schemas",
        &fixture("schemas"),
        "--repo",
        &fixture("repository.json"),
    ]);
    assert_eq!(code(&out), 0);
    let results = json(&out);
    let status = |id: &str| {
        results
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["rule"] == id)
            .map(|r| r["status"].as_str().unwrap().to_string())
            .unwrap()
    };
    assert_eq!(status("C1"), "idle");
    assert_eq!(status("C3"), "enabled");
}

#[test]
fn identify_empty_document() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("empty.iupc");
    std::fs::write(&rules, "").unwrap();
    let out = iupc(&["identify", rules.to_str().unwrap(), "--schemas", &fixture("schemas")]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out), serde_json::json!([]));
}

#[test]
fn identify_writes_a_base_that_replay_can_use() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base");
    let out = iupc(&[
        "identify",
        &fixture("constraints/fig1.iupc"),
        "--schemas",
        &fixture("schemas"),
        "--repo",
        &fixture("repository.json"),
        "--write-base",
        base.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let replayed = iupc(&[
        "replay",
        base.to_str().unwrap(),
        &fixture("traces/c3-three-hours.jsonl"),
        "--resources",
        &fixture("resources.json"),
    ]);
    assert_eq!(code(&replayed), 1);
}

#[test]
fn unreadable_input_is_exit_2() {
    let out = iupc(&["identify", "/nonexistent/rules.iupc", "--schemas", &fixture("schemas")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn syntax_error_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("bad.iupc");
    std::fs::write(&rules, "constraint X {\n  context all;\n  bogus;\n}").unwrap();
    let out = iupc(&["classify", rules.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains('3'));
}

#[test]
fn check_satisfied_constraint() {
    let out = iupc(&["check", &fixture("constraints/c6.iupc"), "--schemas", &fixture("schemas")]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["entries"][0]["status"], "satisfied");
}

#[test]
fn check_reports_uncovered_interval() {
    let out = iupc(&["check", &fixture("gap/c8.iupc"), "--schemas", &fixture("gap/schemas")]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    let interval = &report["entries"][0]["witnesses"][0]["interval"];
    assert_eq!((interval["min"].as_i64(), interval["max"].as_i64()), (Some(62), Some(64)));
}

#[test]
fn check_text_format() {
    let out = iupc(&["check", &fixture("gap/c8.iupc"), "--schemas", &fixture("gap/schemas"), "--format", "text"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("checked 1, skipped 0"));
}

#[test]
fn check_missing_schema_dir_is_exit_2() {
    let out = iupc(&["check", &fixture("constraints/c6.iupc"), "--schemas", "/nonexistent"]);
    assert_eq!(code(&out), 2);
}

fn replay(trace: &str) -> Output {
    iupc(&["replay", &fixture("base"), &fixture(trace), "--resources", &fixture("resources.json")])
}

#[test]
fn replay_exit_codes() {
    let late = replay("traces/c3-three-hours.jsonl");
    assert_eq!(code(&late), 1);
    let line: serde_json::Value = serde_json::from_str(stdout(&late).lines().next().unwrap()).unwrap();
    assert_eq!((line["constraint"].as_str(), line["reason"].as_str()), (Some("C3"), Some("time")));
    assert_eq!(code(&replay("traces/c3-compliant.jsonl")), 0);
    assert_eq!(code(&replay("traces/c11-nurse.jsonl")), 1);
    assert_eq!(code(&replay("traces/c11-doctor.jsonl")), 0);
}

#[test]
fn replay_of_unidentified_document_needs_schemas() {
    let out = iupc(&["replay", &fixture("constraints/c3.iupc"), &fixture("traces/c3-three-hours.jsonl")]);
    assert_eq!(code(&out), 2);
    let with_schemas = iupc(&[
        "replay",
        &fixture("constraints/c3.iupc"),
        &fixture("traces/c3-three-hours.jsonl"),
        "--schemas",
        &fixture("schemas"),
    ]);
    assert_eq!(code(&with_schemas), 1);
}

#[test]
fn lint_fixtures() {
    for name in ["contradiction", "duplicate", "ordering-cycle"] {
        let out = iupc(&["lint", &fixture(&format!("lint/{name}.iupc"))]);
        assert_eq!(code(&out), 1, "{name}");
        assert_eq!(json(&out)["conflicts"].as_array().unwrap().len(), 1, "{name}");
    }
    let meta = iupc(&[
        "lint",
        &fixture("lint/centrifuge-meta.iupc"),
        "--schemas",
        &fixture("schemas"),
        "--resources",
        &fixture("resources.json"),
    ]);
    assert_eq!(code(&meta), 1);
    assert_eq!(json(&meta)["meta_violations"].as_array().unwrap().len(), 1);
}

#[test]
fn lint_clean_base() {
    let out = iupc(&[
        "lint",
        &fixture("base"),
        "--schemas",
        &fixture("schemas"),
        "--resources",
        &fixture("resources.json"),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn classify_lists_every_constraint() {
    let out = iupc(&["classify", &fixture("constraints/fig1.iupc")]);
    assert_eq!(code(&out), 0);
    let rows = json(&out);
    let c11 = rows.as_array().unwrap().iter().find(|r| r["id"] == "C11").unwrap();
    assert_eq!(c11["type"], "resource-attribution");
    assert_eq!(rows.as_array().unwrap().len(), 16);
}
