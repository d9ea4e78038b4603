//! The `fbar` binary: exit codes, manifests, fault reporting and thread independence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kakutani::io::RunManifest;

fn fbar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbar")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fbar(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn build_chain(dir: &Path) {
    ok(dir, &["tree", "--kind", "chain", "--depth", "2", "--out", "tree.json"]);
    ok(dir, &["build", "--tree", "tree.json", "--n-max", "2", "--out", "stages"]);
}

#[test]
fn every_subcommand_succeeds_and_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_chain(dir);
    ok(dir, &["validate", "--stages", "stages"]);
    ok(dir, &["dist", "stages/stage_1.words", "stages/stage_1.words", "--pairs", "sampled:5", "--out", "dist.json"]);
    ok(dir, &["feldman", "--N", "2", "--M", "1", "--type", "1", "--emit", "pattern.words"]);
    ok(dir, &["feldman-sep", "--N", "2", "--M", "2", "--samples", "4", "--out", "sep.json"]);
    ok(dir, &["circ", "--stages", "stages", "--l-seq", "2,2", "--out", "circ"]);
    ok(dir, &["sample", "--stages", "stages", "--n", "1", "--len", "4000", "--shaded", "--out", "seg.words"]);
    ok(dir, &["returns", "seg.words", "--report", "returns.json"]);
    ok(dir, &["audit", "--code", "oracle:0", "--stages", "stages", "--n", "1", "--s", "1", "--samples", "5", "--out", "audit.json"]);
    ok(dir, &["report", "--stages", "stages", "--r9-samples", "20", "--out", "report.json"]);
    let manifests = [
        "tree.json.manifest.json",
        "stages/manifest.json",
        "stages/validation.json.manifest.json",
        "dist.json.manifest.json",
        "pattern.words.manifest.json",
        "sep.json.manifest.json",
        "circ/manifest.json",
        "seg.words.manifest.json",
        "returns.json.manifest.json",
        "audit.json.manifest.json",
        "report.json.manifest.json",
    ];
    let mut commands = std::collections::BTreeSet::new();
    for m in manifests {
        let manifest = RunManifest::read(&dir.join(m)).unwrap_or_else(|e| panic!("{m}: {e}"));
        assert_eq!(manifest.argv[0], "fbar");
        assert!(!manifest.version.is_empty());
        commands.insert(manifest.command);
    }
    assert_eq!(commands.len(), 11);
    let audit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["agreeing_fraction"], 1.0);
}

#[test]
fn a_damaged_stage_fails_validation_with_named_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_chain(dir);
    let path = dir.join("stages/stage_1.words");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[1] = lines[0].clone();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let out = fbar(dir, &["validate", "--stages", "stages", "--out", "v.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("stage 1: E"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("v.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let ids: Vec<&str> = report["failures"].as_array().unwrap().iter().map(|f| f["check"].as_str().unwrap()).collect();
    assert!(ids.iter().any(|id| ["E1", "E2", "E3"].contains(id)), "{ids:?}");
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(fbar(tmp.path(), &["build"]).status.code(), Some(2));
    assert_eq!(fbar(tmp.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(fbar(tmp.path(), &["dist", "a", "b", "--pairs", "some", "--out", "x"]).status.code(), Some(1));
    assert_eq!(fbar(tmp.path(), &["tree", "--kind", "nodes", "--nodes", "0.0", "--out", "t.json"]).status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_the_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args = |threads: &'static str, out: &'static str| {
        ["--threads", threads, "feldman-sep", "--N", "3", "--M", "2", "--samples", "12", "--seed", "4", "--out", out]
    };
    ok(dir, &args("1", "one.json"));
    ok(dir, &args("4", "four.json"));
    assert_eq!(fs::read(dir.join("one.json")).unwrap(), fs::read(dir.join("four.json")).unwrap());
}
