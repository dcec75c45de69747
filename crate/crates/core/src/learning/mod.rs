// SPDX-License-Identifier: Apache-2.0

//! Self-evaluation: rewards, tabular Q-learning over a growing set of
//! contact-trajectory actions, and per-stiffness-cluster tables.

mod actions;
mod cluster;
mod learner;
mod qtable;
mod reward;

use serde::{Deserialize, Serialize};

pub use actions::{grow_action, ActionSet, ContactTrajectoryAction};
pub use cluster::{cluster_for, StiffnessClusterer};
pub use learner::{EpisodeRecord, Learner, LearningReport, QStore, QSTORE_VERSION};
pub use qtable::{q_update, select_action, QTable, Selection, SelectionMode};
pub use reward::{reward, RewardConfig};

use crate::environment::EnvError;
use crate::execution::ExecutionError;

#[derive(Debug, thiserror::Error)]
pub enum LearningError {
    #[error("invalid learning configuration: {0}")]
    Config(String),
    #[error("action space exhausted: next force {next} N exceeds the {max} N ceiling")]
    ActionSpaceExhausted { next: f64, max: f64 },
    #[error("policy has no contact-trajectory step to learn")]
    NoLearnableStep,
    #[error("stiffness clusterer is not fitted")]
    Unfitted,
    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),
    #[error("unknown action {0}")]
    UnknownAction(usize),
    #[error("q store {path}: {message}")]
    Store { path: String, message: String },
    #[error(transparent)]
    Execution(#[from] ExecutionError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningConfig {
    pub reward_success: f64,
    pub penalty_failure: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_grow: f64,
    pub base_force: f64,
    pub force_increment: f64,
    pub max_force: f64,
    pub max_episodes: usize,
    pub clusters: usize,
}

impl Default for LearningConfig {
    fn default() -> Self {
        crate::config::PipelineConfig::default().learning
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<(), String> {
        RewardConfig::new(self.reward_success, self.penalty_failure).map_err(|e| e.to_string())?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err("learning.alpha must lie in (0, 1]".into());
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err("learning.gamma must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_grow) {
            return Err("learning.epsilon_grow must lie in [0, 1]".into());
        }
        if !(self.base_force > 0.0 && self.force_increment > 0.0 && self.max_force >= self.base_force) {
            return Err("learning forces need base_force > 0, force_increment > 0, max_force >= base_force".into());
        }
        if self.max_episodes == 0 || self.clusters == 0 {
            return Err("learning.max_episodes and learning.clusters must be >= 1".into());
        }
        Ok(())
    }

    pub fn reward_config(&self) -> RewardConfig {
        RewardConfig { c1: self.reward_success, c2: self.penalty_failure }
    }
}
