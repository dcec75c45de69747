// SPDX-License-Identifier: Apache-2.0

//! Drives the `lfd` binary, one process per stage.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn lfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfd"))
        .args(args)
        .env_remove("LFD_CONFIG")
        .output()
        .expect("lfd runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stages_in_separate_processes() {
    let dir = tempfile::tempdir().unwrap();
    let (seg, pol, q) = (dir.path().join("seg.json"), dir.path().join("policy.txt"), dir.path().join("q"));
    let trace = data("peel_demo.trace");
    let scen = data("scenarios/cucumber.toml");

    let o = lfd(&["segment", s(&trace), "--out", s(&seg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = lfd(&["infer", s(&seg), "--out", s(&pol)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&pol).unwrap();
    let classes: Vec<&str> = text.lines().filter(|l| !l.starts_with("rel") && !l.starts_with("lfd-policy")).map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(classes, ["Approach", "MoveToContact", "MoveWithContact"]);

    // Base force cannot peel: the run reports the goal as missed.
    let o = lfd(&["run", s(&pol), "--env", s(&scen)]);
    assert_eq!(o.status.code(), Some(2));

    let report = dir.path().join("report.json");
    let o = lfd(&["learn", s(&pol), s(&scen), "--qstore", s(&q), "--report", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(q.join("q_c0_MoveWithContact.json").exists());

    let o = lfd(&["report", s(&report)]);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().last().unwrap().ends_with(",success"));

    // With the learned table the run exploits the peeling action.
    let run_csv = dir.path().join("run.csv");
    let o = lfd(&["run", s(&pol), "--env", s(&scen), "--qstore", s(&q), "--csv", s(&run_csv)]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(run_csv).unwrap().starts_with("step,class,tick,x,y,z,force\n"));
}

#[test]
fn pipeline_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let trace = data("peel_demo.trace");
    let scen = data("scenarios/cucumber.toml");
    for d in [&a, &b] {
        let o = lfd(&["pipeline", s(&trace), s(&scen), "--out", s(d.path())]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["report.json", "report.csv", "policy.txt", "segments.json", "run.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["learning_episodes"], 5);
    assert_eq!(manifest["policy"].as_array().unwrap().len(), 3);
}

#[test]
fn malformed_trace_fails_at_segment() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.trace");
    std::fs::write(&bad, "lfd-trace 1\nnot a frame\n").unwrap();
    let o = lfd(&["pipeline", s(&bad), s(&data("scenarios/cucumber.toml")), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage segment"));
}

#[test]
fn gen_trace_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.trace"), dir.path().join("b.trace"));
    for p in [&a, &b] {
        assert!(lfd(&["gen-trace", "--scenario", "random", "--seed", "11", "--out", s(p)]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(lfd(&["segment", s(&a), "--out", s(&dir.path().join("seg.json"))]).status.success());
}

#[test]
fn shipped_trace_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("peel.trace");
    assert!(lfd(&["gen-trace", "--scenario", "peel-demo", "--seed", "7", "--out", s(&p)]).status.success());
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(data("peel_demo.trace")).unwrap());
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[contact]\ncontact_distance = -1\n").unwrap();
    let o = lfd(&["--config", s(&cfg), "segment", s(&data("peel_demo.trace")), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(o.status.code(), Some(1));
}
