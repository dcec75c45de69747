// SPDX-License-Identifier: Apache-2.0

//! One-shot learning from demonstration.
//!
//! A demonstration trace is cut at physical-interaction keypoints (frames
//! where hand–object or object–object contact flips), each segment is
//! classified into an a-priori skill by a decision tree, and the resulting
//! policy is executed on a simulated arm. Force-trajectory skills that fail to
//! reach their demonstrated goal state are tuned by tabular Q-learning over a
//! growing set of contact-force actions.
//!
//! Modules, in pipeline order:
//! [`trace`] → [`segmentation`] → [`inference`] → [`execution`] (against
//! [`environment`]) → [`learning`]; [`pipeline`] wires the stages together.

// Validation deliberately uses `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod environment;
pub mod execution;
pub mod geometry;
pub mod inference;
pub mod learning;
pub mod pipeline;
pub mod segmentation;
pub mod trace;

pub use config::{ConfigError, PipelineConfig, Seeds};
pub use environment::{EnvScenario, Environment, SimObject};
pub use execution::{ArmModel, ControllerGains, Robot, SkillExecutor, SkillOutcome};
pub use geometry::{Aabb, Vec3};
pub use inference::{DecisionTree, Policy, PolicyStep, SkillClass};
pub use learning::{ContactTrajectoryAction, Learner, LearningReport, QStore, QTable};
pub use segmentation::{Keypoint, Segment};
pub use trace::{DemonstrationTrace, ObjectDatabase, ObjectId};
