// SPDX-License-Identifier: Apache-2.0

//! Learning-loop properties on the shipped peel demonstration.

use std::path::{Path, PathBuf};

use lfd_core::environment::EnvScenario;
use lfd_core::inference::Policy;
use lfd_core::learning::QStore;
use lfd_core::pipeline::{self, Toolkit};
use lfd_core::trace::load_trace;
use lfd_core::PipelineConfig;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn policy(kit: &Toolkit) -> Policy {
    let trace = load_trace(&data("peel_demo.trace"), &kit.db).unwrap();
    let art = pipeline::segment_stage(&trace, String::new(), kit).unwrap();
    pipeline::infer_stage(&art, kit).unwrap()
}

fn scenario(name: &str) -> EnvScenario {
    EnvScenario::load(&data(&format!("scenarios/{name}.toml"))).unwrap()
}

#[test]
fn weak_action_fails_only_the_contact_trajectory() {
    let kit = Toolkit::builtin(PipelineConfig::default());
    let p = policy(&kit);
    let b = pipeline::default_bindings(&p, &scenario("cucumber"), &QStore::default(), Some(0.5), &kit).unwrap();
    let (run, _) = pipeline::run_stage(&p, &scenario("cucumber"), &b, &kit).unwrap();
    assert_eq!(run.steps.iter().map(|s| s.success).collect::<Vec<_>>(), [true, true, false]);
    assert!(!run.success);
}

#[test]
fn stops_at_first_success_and_keeps_columns_in_step() {
    let kit = Toolkit::builtin(PipelineConfig::default());
    let (rep, store) = pipeline::learn_stage(&policy(&kit), &scenario("carrot"), QStore::default(), &kit).unwrap();
    assert!(rep.success);
    // Carrot threshold 2.2 N: first ladder value reaching it is 0.5 + 6 * 0.3.
    assert_eq!(rep.episodes.len(), 7);
    assert_eq!(rep.episodes.iter().filter(|e| e.outcome == "success").count(), 1);
    assert_eq!(rep.episodes.last().unwrap().outcome, "success");
    let t = store.tables().next().unwrap();
    assert_eq!(t.actions().len(), rep.action_set_size);
    for s in t.states() {
        assert_eq!(t.row(s).len(), t.actions().len());
    }
}

#[test]
fn force_ceiling_halts_learning() {
    let mut cfg = PipelineConfig::default();
    cfg.learning.max_force = 1.2;
    let kit = Toolkit::builtin(cfg);
    let (rep, _) = pipeline::learn_stage(&policy(&kit), &scenario("cucumber"), QStore::default(), &kit).unwrap();
    assert!(!rep.success);
    assert_eq!(rep.action_set_size, 3);
    assert!(rep.stop_reason.contains("exhausted"), "{}", rep.stop_reason);
}

#[test]
fn noisy_learning_still_finds_a_peeling_force() {
    let kit = Toolkit::builtin(PipelineConfig::default());
    let sc = scenario("cucumber").with_noise(true);
    let (rep, _) = pipeline::learn_stage(&policy(&kit), &sc, QStore::default(), &kit).unwrap();
    assert!(rep.success, "{}", rep.stop_reason);
    assert!(rep.episodes.last().unwrap().force >= 1.5);
}
