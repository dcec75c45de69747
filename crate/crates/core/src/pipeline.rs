// SPDX-License-Identifier: Apache-2.0

//! Stage functions and the end-to-end pipeline. Every stage reads its inputs
//! from the previous stage's persisted artifact, so stages can run in
//! separate processes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::environment::{EnvScenario, Environment};
use crate::execution::{ActionBindings, Robot, SkillExecutor, SkillOutcome};
use crate::geometry::Vec3;
use crate::inference::{
    label_segments, policy_from_segments, DecisionTree, LabeledSegment, LabelingTable, Policy, SkillClass,
    TransitionTable,
};
use crate::learning::{
    select_action, ContactTrajectoryAction, Learner, LearningError, LearningReport, QStore, Selection,
    SelectionMode, StiffnessClusterer,
};
use crate::segmentation::{detect_keypoints, segment_trace, Keypoint, SceneModel};
use crate::trace::{load_trace, DemonstrationTrace, ObjectDatabase};

pub const SEGMENTS_FILE: &str = "segments.json";
pub const POLICY_FILE: &str = "policy.txt";
pub const RUN_CSV_FILE: &str = "run.csv";
pub const RUN_JSON_FILE: &str = "run.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const QSTORE_DIR: &str = "qstore";

/// A failed stage: its name and a diagnostic.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &str, e: impl std::fmt::Display) -> Self {
        Self { stage: stage.into(), message: e.to_string() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything the stages share besides their artifacts.
#[derive(Debug, Clone)]
pub struct Toolkit {
    pub config: PipelineConfig,
    pub db: ObjectDatabase,
    pub labels: LabelingTable,
    pub transitions: TransitionTable,
}

impl Toolkit {
    pub fn builtin(config: PipelineConfig) -> Self {
        Self {
            config,
            db: ObjectDatabase::builtin(),
            labels: LabelingTable::builtin(),
            transitions: TransitionTable::builtin(),
        }
    }

    pub fn executor(&self) -> SkillExecutor {
        SkillExecutor::new(self.config.gains, self.config.execution.clone())
    }

    /// Stiffness clusters fitted over the object database.
    pub fn clusterer(&self) -> Result<StiffnessClusterer, LearningError> {
        let k: Vec<f64> = self.db.classes().map(|(_, c)| c.stiffness).collect();
        StiffnessClusterer::fit(&k, self.config.learning.clusters)
    }

    /// A fresh world for `scenario`: environment plus arm at the start pose.
    pub fn world(&self, scenario: &EnvScenario) -> Result<(Environment, Robot), LearningError> {
        let env = Environment::from_scenario(scenario, &self.db, &self.config.environment)?;
        let robot = Robot::at_tip(self.executor().arm(), &Vec3::from(scenario.start_tip))?;
        Ok((env, robot))
    }
}

/// Output of the segmentation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentArtifact {
    pub trace_sha256: String,
    pub keypoints: Vec<Keypoint>,
    pub segments: Vec<LabeledSegment>,
}

impl SegmentArtifact {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("segments serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn segment_stage(trace: &DemonstrationTrace, trace_sha256: String, kit: &Toolkit) -> Result<SegmentArtifact, PipelineError> {
    let err = |e: &dyn std::fmt::Display| PipelineError::new("segment", e);
    let scene = SceneModel::from_trace(trace, &kit.db).map_err(|e| err(&e))?;
    let params = &kit.config.contact;
    let keypoints = detect_keypoints(trace, &scene, params);
    let segments = segment_trace(trace, &scene, &keypoints, params);
    let segments = label_segments(trace, &segments, &kit.db).map_err(|e| err(&e))?;
    Ok(SegmentArtifact { trace_sha256, keypoints, segments })
}

pub fn infer_stage(artifact: &SegmentArtifact, kit: &Toolkit) -> Result<Policy, PipelineError> {
    let err = |e: crate::inference::InferenceError| PipelineError::new("infer", e);
    let tree = DecisionTree::train(&kit.labels.training_set()).map_err(err)?;
    policy_from_segments(&artifact.segments, &tree, &kit.transitions).map_err(err)
}

/// Contact-trajectory action for every force-trajectory step: the fixed force
/// if given, else the best stored action for the object's cluster, else the
/// base force.
pub fn default_bindings(
    policy: &Policy,
    scenario: &EnvScenario,
    store: &QStore,
    force: Option<f64>,
    kit: &Toolkit,
) -> Result<ActionBindings, LearningError> {
    let clusterer = kit.clusterer()?;
    let (env, _) = kit.world(scenario)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(kit.config.seeds.learner);
    let mut out = ActionBindings::new();
    for (i, step) in policy.steps.iter().enumerate() {
        if step.class != SkillClass::MoveWithContact {
            continue;
        }
        let fallback = ContactTrajectoryAction {
            action_id: 0,
            base_trajectory: Vec::new(),
            target_force: force.unwrap_or(kit.config.learning.base_force),
        };
        let action = match force {
            Some(_) => fallback,
            None => {
                let cluster = clusterer.cluster_for(env.object(step.object_id)?.stiffness)?;
                match store.get(cluster, step.class) {
                    Some(t) => match select_action(t, &step.start_state, SelectionMode::Exploit, &mut rng) {
                        Selection::Action(a) => t.action(a).cloned().unwrap_or(fallback),
                        Selection::Grow => fallback,
                    },
                    None => fallback,
                }
            }
        };
        out.insert(i, action);
    }
    Ok(out)
}

use rand::SeedableRng as _;

/// Execution summary written by the run stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub scenario: String,
    pub success: bool,
    pub steps: Vec<RunStepSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStepSummary {
    pub class: SkillClass,
    pub success: bool,
    pub final_state: String,
    pub steps_used: usize,
    pub final_force: f64,
    pub target_force: Option<f64>,
    pub reason: Option<String>,
}

impl RunArtifact {
    pub fn from_outcomes(scenario: &str, policy: &Policy, outcomes: &[SkillOutcome]) -> Self {
        Self {
            scenario: scenario.into(),
            success: outcomes.len() == policy.len() && outcomes.iter().all(|o| o.success),
            steps: outcomes
                .iter()
                .map(|o| RunStepSummary {
                    class: o.class,
                    success: o.success,
                    final_state: o.final_state.clone(),
                    steps_used: o.steps_used,
                    final_force: o.force_log.last().copied().unwrap_or(0.0),
                    target_force: o.target_force,
                    reason: o.reason.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run summary serializes") + "\n"
    }
}

/// Per-control-step force and pose log for plotting.
pub fn outcomes_csv(outcomes: &[SkillOutcome]) -> String {
    let mut out = String::from("step,class,tick,x,y,z,force\n");
    for (i, o) in outcomes.iter().enumerate() {
        for (t, (p, f)) in o.pose_log.iter().zip(&o.force_log).enumerate() {
            let _ = writeln!(out, "{i},{},{t},{:.6},{:.6},{:.6},{:.6}", o.class, p.x, p.y, p.z, f);
        }
    }
    out
}

pub fn run_stage(
    policy: &Policy,
    scenario: &EnvScenario,
    bindings: &ActionBindings,
    kit: &Toolkit,
) -> Result<(RunArtifact, Vec<SkillOutcome>), PipelineError> {
    let err = |e: &dyn std::fmt::Display| PipelineError::new("run", e);
    let (mut env, mut robot) = kit.world(scenario).map_err(|e| err(&e))?;
    let outcomes = kit.executor().execute_policy(policy, &mut env, &mut robot, bindings).map_err(|e| err(&e))?;
    Ok((RunArtifact::from_outcomes(&scenario.name, policy, &outcomes), outcomes))
}

pub fn learn_stage(
    policy: &Policy,
    scenario: &EnvScenario,
    store: QStore,
    kit: &Toolkit,
) -> Result<(LearningReport, QStore), PipelineError> {
    let err = |e: LearningError| PipelineError::new("learn", e);
    let mut learner =
        Learner::new(kit.config.learning.clone(), kit.clusterer().map_err(err)?, store, kit.config.seeds.learner)
            .map_err(err)?;
    let report = learner.learn_until_success(policy, &kit.executor(), || kit.world(scenario)).map_err(err)?;
    Ok((report, learner.into_store()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_sha256: String,
    pub trace_sha256: String,
    pub scenario_sha256: String,
    pub seeds: crate::config::Seeds,
    pub stages: Vec<StageRecord>,
    pub policy: Vec<SkillClass>,
    pub learning_episodes: usize,
    pub final_goal_achieved: bool,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

struct Writer {
    dir: PathBuf,
}

impl Writer {
    fn write(&self, stage: &str, name: &str, text: &str, rec: &mut StageRecord) -> Result<(), PipelineError> {
        std::fs::write(self.dir.join(name), text).map_err(|e| PipelineError::new(stage, format!("writing {name}: {e}")))?;
        rec.outputs.insert(name.into(), sha256_hex(text.as_bytes()));
        Ok(())
    }
}

fn record(name: &str) -> (StageRecord, Instant) {
    (StageRecord { name: name.into(), outputs: BTreeMap::new(), millis: 0 }, Instant::now())
}

/// Runs segment → infer → run → learn, writing each stage's artifacts into
/// `out_dir` as it goes. Learning starts from `qstore` if given, else from an
/// empty store; tables are saved under `out_dir/qstore`.
pub fn cmd_pipeline(
    trace_path: &Path,
    scenario_path: &Path,
    kit: &Toolkit,
    out_dir: &Path,
    qstore: Option<&Path>,
) -> Result<RunManifest, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::new("setup", e))?;
    let w = Writer { dir: out_dir.to_path_buf() };
    let mut stages = Vec::new();

    let (mut rec, t0) = record("segment");
    let trace_bytes = std::fs::read(trace_path).map_err(|e| PipelineError::new("segment", format!("{}: {e}", trace_path.display())))?;
    let trace = load_trace(trace_path, &kit.db).map_err(|e| PipelineError::new("segment", e))?;
    let trace_sha256 = sha256_hex(&trace_bytes);
    let artifact = segment_stage(&trace, trace_sha256.clone(), kit)?;
    w.write("segment", SEGMENTS_FILE, &artifact.to_json(), &mut rec)?;
    rec.millis = t0.elapsed().as_millis();
    stages.push(rec);

    let (mut rec, t0) = record("infer");
    let policy = infer_stage(&artifact, kit)?;
    w.write("infer", POLICY_FILE, &policy.to_text(), &mut rec)?;
    rec.millis = t0.elapsed().as_millis();
    stages.push(rec);

    let (mut rec, t0) = record("run");
    let scenario_text =
        std::fs::read_to_string(scenario_path).map_err(|e| PipelineError::new("run", format!("{}: {e}", scenario_path.display())))?;
    let scenario = EnvScenario::from_toml_str(&scenario_text).map_err(|e| PipelineError::new("run", e))?;
    let store = match qstore {
        Some(dir) => QStore::load(dir).map_err(|e| PipelineError::new("run", e))?,
        None => QStore::default(),
    };
    let bindings = default_bindings(&policy, &scenario, &store, None, kit).map_err(|e| PipelineError::new("run", e))?;
    let (run, outcomes) = run_stage(&policy, &scenario, &bindings, kit)?;
    w.write("run", RUN_JSON_FILE, &run.to_json(), &mut rec)?;
    w.write("run", RUN_CSV_FILE, &outcomes_csv(&outcomes), &mut rec)?;
    rec.millis = t0.elapsed().as_millis();
    stages.push(rec);

    let (mut rec, t0) = record("learn");
    let has_learnable = policy.steps.iter().any(|s| s.class == SkillClass::MoveWithContact);
    let (final_goal_achieved, episodes) = if has_learnable {
        let (report, store) = learn_stage(&policy, &scenario, store, kit)?;
        w.write("learn", REPORT_JSON_FILE, &report.to_json(), &mut rec)?;
        w.write("learn", REPORT_CSV_FILE, &report.to_csv(), &mut rec)?;
        let qdir = out_dir.join(QSTORE_DIR);
        if qdir.exists() {
            std::fs::remove_dir_all(&qdir).map_err(|e| PipelineError::new("learn", e))?;
        }
        store.save(&qdir).map_err(|e| PipelineError::new("learn", e))?;
        for (name, hash) in store.hashes() {
            rec.outputs.insert(format!("{QSTORE_DIR}/{name}"), hash);
        }
        (report.success, report.episodes.len())
    } else {
        (run.success, 0)
    };
    rec.millis = t0.elapsed().as_millis();
    stages.push(rec);

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: kit.config.hash(),
        trace_sha256,
        scenario_sha256: sha256_hex(scenario_text.as_bytes()),
        seeds: kit.config.seeds,
        stages,
        policy: policy.classes(),
        learning_episodes: episodes,
        final_goal_achieved,
    };
    std::fs::write(out_dir.join(MANIFEST_FILE), manifest.to_json()).map_err(|e| PipelineError::new("manifest", e))?;
    Ok(manifest)
}
