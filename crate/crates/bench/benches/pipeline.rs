// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use lfd_core::environment::EnvScenario;
use lfd_core::inference::{DecisionTree, LabelingTable};
use lfd_core::learning::QStore;
use lfd_core::pipeline::{self, Toolkit};
use lfd_core::segmentation::{detect_keypoints, segment_trace, SceneModel};
use lfd_core::trace::{synthesize_trace, ScenarioSpec};
use lfd_core::PipelineConfig;

fn benches(c: &mut Criterion) {
    let kit = Toolkit::builtin(PipelineConfig::default());
    let spec = ScenarioSpec::random(3, &kit.db);
    let (trace, _) = synthesize_trace(&spec, 3, &kit.db).unwrap();
    let scene = SceneModel::from_trace(&trace, &kit.db).unwrap();
    let params = kit.config.contact.clone();
    c.bench_function("segment_random_trace", |b| {
        b.iter(|| {
            let k = detect_keypoints(&trace, &scene, &params);
            segment_trace(&trace, &scene, &k, &params)
        })
    });

    let set = LabelingTable::builtin().training_set();
    c.bench_function("train_decision_tree", |b| b.iter(|| DecisionTree::train(&set).unwrap()));

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let demo = lfd_core::trace::load_trace(&data.join("peel_demo.trace"), &kit.db).unwrap();
    let art = pipeline::segment_stage(&demo, String::new(), &kit).unwrap();
    let policy = pipeline::infer_stage(&art, &kit).unwrap();
    let scenario = EnvScenario::load(&data.join("scenarios/cucumber.toml")).unwrap();
    let mut g = c.benchmark_group("learning");
    g.sample_size(20);
    g.bench_function("learn_cucumber_from_scratch", |b| {
        b.iter(|| pipeline::learn_stage(&policy, &scenario, QStore::default(), &kit).unwrap())
    });
    g.finish();
}

criterion_group!(all, benches);
criterion_main!(all);
