use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ytwin(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_ytwin")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "ytwin {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_recipe(dir: &Path) -> String {
    let text =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/recipes/scaled.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["simulation"]["days"] = 2.into();
    v["simulation"]["starting_agents"] = 10.into();
    let path = dir.join("small.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn feeds_run_and_export_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("y.db");
    let db_s = db.to_str().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/feeds");

    let out = ytwin(&[
        "feeds",
        "ingest",
        "--db",
        db_s,
        "--catalog",
        fixtures.join("catalog.jsonl").to_str().unwrap(),
        "--from-dir",
        fixtures.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["websites"], 6);
    assert_eq!(report["new_articles"], 60);

    let recipe = small_recipe(dir.path());
    let manifest_path = dir.path().join("manifest.json");
    let out = ytwin(&[
        "run",
        "--mock-llm",
        "--db",
        db_s,
        "--recipe",
        &recipe,
        "--manifest",
        manifest_path.to_str().unwrap(),
    ]);
    let manifest: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(manifest["end_round"], 48);
    assert_eq!(manifest["agents_owned"], 12);
    assert_eq!(std::fs::read(&manifest_path).unwrap(), out.stdout);

    // a second plain run on the same store is refused
    let again = Command::new(env!("CARGO_BIN_EXE_ytwin"))
        .args(["run", "--mock-llm", "--db", db_s, "--recipe", &recipe])
        .output()
        .unwrap();
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("--resume"));

    let exports = dir.path().join("out");
    let out = ytwin(&["export", "--db", db_s, "--out", exports.to_str().unwrap()]);
    let files = String::from_utf8(out.stdout).unwrap();
    assert!(files.lines().count() >= 5, "{files}");
    for f in files.lines() {
        assert!(Path::new(f).exists(), "{f}");
    }
}

#[test]
fn bad_recipes_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let recipe = dir.path().join("broken.json");
    std::fs::write(&recipe, "{\"servers\": 3}").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ytwin"))
        .args(["run", "--mock-llm", "--db"])
        .arg(dir.path().join("y.db"))
        .arg("--recipe")
        .arg(&recipe)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: loading"));
}
