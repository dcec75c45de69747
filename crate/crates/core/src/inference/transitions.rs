// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{InferenceError, Policy, PolicyStep, SkillClass, StepSegment};

const BUILTIN_TABLE: &str = include_str!("../../../../data/transitions.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Direct,
    Bridge(SkillClass),
}

/// How consecutive skills chain. Pairs absent from the table are errors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pairs: BTreeMap<(SkillClass, SkillClass), Transition>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    bridge: SkillClass,
    bridge_targets: Vec<SkillClass>,
}

impl TransitionTable {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_TABLE).expect("builtin transition table is valid")
    }

    /// Expands the rule file: positional -> bridge target needs the bridge skill.
    pub fn from_toml_str(text: &str) -> Result<Self, InferenceError> {
        let rule: RuleFile = toml::from_str(text).map_err(|e| InferenceError::Table(e.to_string()))?;
        if rule.bridge_targets.contains(&rule.bridge) {
            return Err(InferenceError::Table("bridge skill cannot bridge into itself".into()));
        }
        let mut pairs = BTreeMap::new();
        for a in SkillClass::ALL {
            for b in SkillClass::ALL {
                let t = if !a.is_force_based() && rule.bridge_targets.contains(&b) {
                    Transition::Bridge(rule.bridge)
                } else {
                    Transition::Direct
                };
                pairs.insert((a, b), t);
            }
        }
        Ok(Self { pairs })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = ((SkillClass, SkillClass), Transition)>) -> Self {
        Self { pairs: pairs.into_iter().collect() }
    }

    pub fn lookup(&self, from: SkillClass, to: SkillClass) -> Result<Transition, InferenceError> {
        self.pairs.get(&(from, to)).copied().ok_or(InferenceError::UnknownTransition { from, to })
    }
}

/// Inserts bridge skills between steps that cannot chain directly. A bridge
/// takes the state at the start of the following step as its goal, and a
/// synthetic segment joining the neighbours' trajectories.
pub fn insert_transitions(steps: Vec<PolicyStep>, table: &TransitionTable) -> Result<Policy, InferenceError> {
    if steps.is_empty() {
        return Err(InferenceError::EmptyPolicy);
    }
    let mut out: Vec<PolicyStep> = Vec::with_capacity(steps.len() + 2);
    for step in steps {
        if let Some(prev) = out.last() {
            match table.lookup(prev.class, step.class)? {
                Transition::Direct => {}
                Transition::Bridge(bridge) => {
                    let mut relative = Vec::new();
                    relative.extend(prev.segment.relative.last().copied());
                    relative.extend(step.segment.relative.first().copied());
                    let bridge_step = PolicyStep {
                        class: bridge,
                        goal_state: step.start_state.clone(),
                        start_state: prev.goal_state.clone(),
                        object_id: step.object_id,
                        object_class: step.object_class.clone(),
                        segment: StepSegment {
                            start_frame: prev.segment.end_frame,
                            end_frame: step.segment.start_frame,
                            relative,
                            synthetic: true,
                        },
                    };
                    // The bridge must itself chain into the next step.
                    if table.lookup(bridge, step.class)? != Transition::Direct {
                        return Err(InferenceError::UnknownTransition { from: bridge, to: step.class });
                    }
                    out.push(bridge_step);
                }
            }
        }
        out.push(step);
    }
    Ok(Policy { steps: out })
}
