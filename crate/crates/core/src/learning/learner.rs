// SPDX-License-Identifier: Apache-2.0

//! The learning loop: exploit the best known action first, explore (biased
//! towards growing the action set) after failures, update after every
//! attempt, and stop at the first episode that reaches the goal state.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{reward, select_action, LearningConfig, LearningError, QTable, RewardConfig, Selection, SelectionMode, StiffnessClusterer};
use crate::environment::Environment;
use crate::execution::{ActionBindings, Robot, SkillExecutor};
use crate::inference::{Policy, SkillClass};

/// Format version of persisted Q tables.
pub const QSTORE_VERSION: u32 = 1;

/// All Q tables, keyed by (stiffness cluster, skill).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QStore {
    tables: BTreeMap<(usize, SkillClass), QTable>,
}

impl QStore {
    pub fn file_name(cluster: usize, skill: SkillClass) -> String {
        format!("q_c{cluster}_{skill}.json")
    }

    pub fn get(&self, cluster: usize, skill: SkillClass) -> Option<&QTable> {
        self.tables.get(&(cluster, skill))
    }

    pub fn get_or_create(&mut self, cluster: usize, skill: SkillClass, cfg: &LearningConfig) -> &mut QTable {
        self.tables
            .entry((cluster, skill))
            .or_insert_with(|| QTable::new(cluster, skill, cfg.alpha, cfg.gamma, cfg.epsilon_grow))
    }

    pub fn tables(&self) -> impl Iterator<Item = &QTable> {
        self.tables.values()
    }

    /// Per-table hashes keyed by file name.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.tables.values().map(|t| (Self::file_name(t.cluster, t.skill), t.hash())).collect()
    }

    /// Loads every `q_c*_*.json` in `dir`; a missing directory is an empty store.
    pub fn load(dir: &Path) -> Result<Self, LearningError> {
        let mut store = Self::default();
        let err = |p: &Path, m: String| LearningError::Store { path: p.display().to_string(), message: m };
        let entries = match std::fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(store),
            Err(e) => return Err(err(dir, e.to_string())),
        };
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if !(name.starts_with("q_c") && name.ends_with(".json")) {
                continue;
            }
            let text = std::fs::read_to_string(&p).map_err(|e| err(&p, e.to_string()))?;
            let table: QTable = serde_json::from_str(&text).map_err(|e| err(&p, e.to_string()))?;
            table.validate().map_err(|m| err(&p, m))?;
            if Self::file_name(table.cluster, table.skill) != name {
                return Err(err(&p, "file name does not match table key".into()));
            }
            store.tables.insert((table.cluster, table.skill), table);
        }
        Ok(store)
    }

    pub fn save(&self, dir: &Path) -> Result<(), LearningError> {
        let err = |p: &Path, e: std::io::Error| LearningError::Store { path: p.display().to_string(), message: e.to_string() };
        std::fs::create_dir_all(dir).map_err(|e| err(dir, e))?;
        for t in self.tables.values() {
            let p = dir.join(Self::file_name(t.cluster, t.skill));
            std::fs::write(&p, t.to_json()).map_err(|e| err(&p, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub mode: SelectionMode,
    /// True when this episode appended a new action.
    pub grew: bool,
    pub action_id: usize,
    pub force: f64,
    pub reward: f64,
    pub outcome: String,
    pub final_state: String,
    /// Q value of the tried action after the update.
    pub q_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningReport {
    pub seed: u64,
    pub cluster: usize,
    pub skill: SkillClass,
    pub object_id: u32,
    pub object_class: String,
    pub start_state: String,
    pub goal_state: String,
    pub episodes: Vec<EpisodeRecord>,
    pub success: bool,
    pub action_set_size: usize,
    pub stop_reason: String,
    pub table_hash: String,
}

impl LearningReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Per-episode learning curve for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,action_id,force,reward,outcome\n");
        for e in &self.episodes {
            let _ = writeln!(out, "{},{},{:.6},{:.6},{}", e.episode, e.action_id, e.force, e.reward, e.outcome);
        }
        out
    }
}

pub struct Learner {
    cfg: LearningConfig,
    reward: RewardConfig,
    clusterer: StiffnessClusterer,
    store: QStore,
    seed: u64,
    rng: ChaCha8Rng,
}

impl Learner {
    pub fn new(cfg: LearningConfig, clusterer: StiffnessClusterer, store: QStore, seed: u64) -> Result<Self, LearningError> {
        cfg.validate().map_err(LearningError::Config)?;
        if clusterer.centers().is_empty() {
            return Err(LearningError::Unfitted);
        }
        let reward = RewardConfig::new(cfg.reward_success, cfg.penalty_failure)?;
        Ok(Self { cfg, reward, clusterer, store, seed, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn store(&self) -> &QStore {
        &self.store
    }

    pub fn into_store(self) -> QStore {
        self.store
    }

    pub fn clusterer(&self) -> &StiffnessClusterer {
        &self.clusterer
    }

    /// Learns the contact-trajectory action of `policy`'s first
    /// force-trajectory step. Every episode runs the whole policy in a fresh
    /// world from `world`; the chosen action drives every such step.
    pub fn learn_until_success<F>(
        &mut self,
        policy: &Policy,
        executor: &SkillExecutor,
        mut world: F,
    ) -> Result<LearningReport, LearningError>
    where
        F: FnMut() -> Result<(Environment, Robot), LearningError>,
    {
        let learn: Vec<usize> = (0..policy.len()).filter(|&i| policy.steps[i].class == SkillClass::MoveWithContact).collect();
        let Some(&first) = learn.first() else {
            return Err(LearningError::NoLearnableStep);
        };
        let step = &policy.steps[first];
        let (probe, _) = world()?;
        let cluster = self.clusterer.cluster_for(probe.object(step.object_id)?.stiffness)?;
        let (s, s_star) = (step.start_state.clone(), step.goal_state.clone());
        let baseline = step.segment.relative.clone();
        let cfg = self.cfg.clone();
        let reward_cfg = self.reward;

        let mut episodes = Vec::new();
        let mut success = false;
        let mut stop_reason = format!("episode budget {} exhausted", cfg.max_episodes);
        for episode in 1..=cfg.max_episodes {
            let table = self.store.get_or_create(cluster, step.class, &cfg);
            let mode = if episode == 1 { SelectionMode::Exploit } else { SelectionMode::Explore };
            let (action, grew) = match select_action(table, &s, mode, &mut self.rng) {
                Selection::Action(a) => (table.action(a).cloned().ok_or(LearningError::UnknownAction(a))?, false),
                Selection::Grow => match table.grow(&baseline, cfg.base_force, cfg.force_increment, cfg.max_force) {
                    Ok(a) => (a, true),
                    Err(e @ LearningError::ActionSpaceExhausted { .. }) => {
                        stop_reason = e.to_string();
                        break;
                    }
                    Err(e) => return Err(e),
                },
            };
            let bindings: ActionBindings = learn.iter().map(|&i| (i, action.clone())).collect();
            let (mut env, mut robot) = world()?;
            let outcomes = executor.execute_policy(policy, &mut env, &mut robot, &bindings)?;
            let s_next = env.detect_state(step.object_id)?.to_string();
            let all_ok = outcomes.len() == policy.len() && outcomes.iter().all(|o| o.success);
            let r = reward(&s_next, &s_star, &reward_cfg);
            let table = self.store.get_or_create(cluster, step.class, &cfg);
            let q_value = table.update(&s, action.action_id, r, &s_next)?;
            let ok = all_ok && s_next == s_star;
            episodes.push(EpisodeRecord {
                episode,
                mode,
                grew,
                action_id: action.action_id,
                force: action.target_force,
                reward: r,
                outcome: if ok { "success" } else { "failure" }.into(),
                final_state: s_next,
                q_value,
            });
            if ok {
                success = true;
                stop_reason = format!("goal state reached on episode {episode}");
                break;
            }
        }
        let table = self.store.get_or_create(cluster, step.class, &cfg);
        Ok(LearningReport {
            seed: self.seed,
            cluster,
            skill: step.class,
            object_id: step.object_id,
            object_class: step.object_class.clone(),
            start_state: s,
            goal_state: s_star,
            episodes,
            success,
            action_set_size: table.actions().len(),
            stop_reason,
            table_hash: table.hash(),
        })
    }
}
