// SPDX-License-Identifier: Apache-2.0

//! Skill inference: segment classification with a decision tree, transition
//! insertion, and policy assembly.

mod labeling;
mod policy;
mod skill;
mod transitions;
mod tree;

pub use labeling::LabelingTable;
pub use policy::{
    build_policy, label_segments, policy_from_segments, LabeledSegment, Policy, PolicyStep, StepSegment, POLICY_MAGIC,
};
pub use skill::{SkillClass, UnknownSkill};
pub use transitions::{insert_transitions, Transition, TransitionTable};
pub use tree::{train_tree, DecisionTree, Node, SegmentFeatureVector, SplitTest, FEATURE_NAMES};

use crate::trace::ObjectId;

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("contradictory labels for {features:?}: {first} vs {second}")]
    ContradictoryLabels { features: SegmentFeatureVector, first: SkillClass, second: SkillClass },
    #[error("no transition rule for {from} -> {to}")]
    UnknownTransition { from: SkillClass, to: SkillClass },
    #[error("cannot build a policy from zero steps")]
    EmptyPolicy,
    #[error("segment refers to unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("table: {0}")]
    Table(String),
    #[error("policy line {line}: {message}")]
    PolicyFormat { line: usize, message: String },
}

/// The builtin tree trained on the builtin labeling table.
pub fn builtin_tree() -> DecisionTree {
    DecisionTree::train(&LabelingTable::builtin().training_set()).expect("builtin labeling table trains")
}
