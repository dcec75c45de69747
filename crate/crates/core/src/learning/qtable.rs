// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{grow_action, ActionSet, ContactTrajectoryAction, LearningError};
use crate::geometry::Vec3;
use crate::inference::SkillClass;

/// Q values for one (stiffness cluster, skill) pair. States are object-state
/// labels; columns are the actions of the table's own action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub version: u32,
    pub cluster: usize,
    pub skill: SkillClass,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_grow: f64,
    actions: ActionSet,
    rows: BTreeMap<String, Vec<f64>>,
}

impl QTable {
    pub fn new(cluster: usize, skill: SkillClass, alpha: f64, gamma: f64, epsilon_grow: f64) -> Self {
        Self {
            version: super::QSTORE_VERSION,
            cluster,
            skill,
            alpha,
            gamma,
            epsilon_grow,
            actions: ActionSet::default(),
            rows: BTreeMap::new(),
        }
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn action(&self, id: usize) -> Option<&ContactTrajectoryAction> {
        self.actions.get(id)
    }

    /// Row of `s`, one value per action; unseen states read as zeros.
    pub fn row(&self, s: &str) -> Vec<f64> {
        self.rows.get(s).cloned().unwrap_or_else(|| vec![0.0; self.actions.len()])
    }

    pub fn states(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn value(&self, s: &str, a: usize) -> f64 {
        self.rows.get(s).and_then(|r| r.get(a)).copied().unwrap_or(0.0)
    }

    pub fn set_value(&mut self, s: &str, a: usize, v: f64) -> Result<(), LearningError> {
        if a >= self.actions.len() {
            return Err(LearningError::UnknownAction(a));
        }
        let n = self.actions.len();
        self.rows.entry(s.to_string()).or_insert_with(|| vec![0.0; n])[a] = v;
        Ok(())
    }

    /// `max_a Q(s, a)`, zero when there are no actions.
    pub fn max_value(&self, s: &str) -> f64 {
        let row = self.row(s);
        if row.is_empty() {
            0.0
        } else {
            row.into_iter().fold(f64::NEG_INFINITY, f64::max)
        }
    }

    /// Bellman update with the table's own learning rate.
    pub fn update(&mut self, s: &str, a: usize, r: f64, s_next: &str) -> Result<f64, LearningError> {
        self.update_with_rate(s, a, r, s_next, self.alpha)
    }

    /// `Q(s,a) ← Q(s,a) + α [r + γ max_a' Q(s',a') − Q(s,a)]`.
    pub fn update_with_rate(&mut self, s: &str, a: usize, r: f64, s_next: &str, alpha: f64) -> Result<f64, LearningError> {
        if !r.is_finite() {
            return Err(LearningError::NonFiniteReward(r));
        }
        let q = self.value(s, a);
        let v = q + alpha * (r + self.gamma * self.max_value(s_next) - q);
        self.set_value(s, a, v)?;
        Ok(v)
    }

    /// Appends the next action on the force ladder; every row gains a zero column.
    pub fn grow(
        &mut self,
        baseline: &[Vec3],
        base_force: f64,
        increment: f64,
        max_force: f64,
    ) -> Result<ContactTrajectoryAction, LearningError> {
        let a = grow_action(&mut self.actions, baseline, base_force, increment, max_force)?;
        for row in self.rows.values_mut() {
            row.push(0.0);
        }
        Ok(a)
    }

    /// Structural checks after loading from disk.
    pub fn validate(&self) -> Result<(), String> {
        if self.version != super::QSTORE_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        if let Some((s, _)) = self.rows.iter().find(|(_, r)| r.len() != self.actions.len()) {
            return Err(format!("row {s:?} has the wrong number of columns"));
        }
        Ok(())
    }

    /// Canonical JSON form, as persisted.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("q table serializes") + "\n"
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Free-function form of [`QTable::update`].
pub fn q_update(table: &mut QTable, s: &str, a: usize, r: f64, s_next: &str) -> Result<f64, LearningError> {
    table.update(s, a, r, s_next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Exploit,
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Action(usize),
    /// Ask for a new action to be appended to the set.
    Grow,
}

/// Exploit: the best known action (ties to the lowest id), or `Grow` with no
/// actions. Explore: `Grow` when every existing action is penalized; otherwise
/// `Grow` with probability `epsilon_grow`, else a uniformly random existing action.
pub fn select_action(table: &QTable, s: &str, mode: SelectionMode, rng: &mut impl Rng) -> Selection {
    let row = table.row(s);
    if row.is_empty() {
        return Selection::Grow;
    }
    match mode {
        SelectionMode::Exploit => {
            let mut best = 0;
            for (a, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = a;
                }
            }
            Selection::Action(best)
        }
        SelectionMode::Explore => {
            if row.iter().all(|&v| v < 0.0) || rng.random::<f64>() < table.epsilon_grow {
                Selection::Grow
            } else {
                Selection::Action(rng.random_range(0..row.len()))
            }
        }
    }
}
