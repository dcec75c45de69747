// SPDX-License-Identifier: Apache-2.0

//! The inferred policy: an ordered list of (skill, goal state, segment) steps,
//! and its text file format.
//!
//! ```text
//! lfd-policy 1
//! Approach unpeeled 0 45 object=1:cucumber from=unpeeled synthetic=0
//! rel x y z x y z ...
//! ```
//!
//! The first four tokens of a step line are `class goal_state start_frame end_frame`.
//! The optional `rel` line that follows carries the step's relative trajectory.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    insert_transitions, DecisionTree, InferenceError, SegmentFeatureVector, SkillClass, TransitionTable,
};
use crate::geometry::Vec3;
use crate::segmentation::Segment;
use crate::trace::{io_fmt_f64, DemonstrationTrace, ObjectDatabase, ObjectId};

pub const POLICY_MAGIC: &str = "lfd-policy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSegment {
    pub start_frame: usize,
    pub end_frame: usize,
    /// Hand-minus-object trajectory from the demonstration.
    pub relative: Vec<Vec3>,
    /// True for steps inserted as transitions.
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStep {
    pub class: SkillClass,
    /// Object state the step must produce.
    pub goal_state: String,
    /// Object state when the step began in the demonstration.
    pub start_state: String,
    pub object_id: ObjectId,
    pub object_class: String,
    pub segment: StepSegment,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Policy {
    pub steps: Vec<PolicyStep>,
}

impl Policy {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn classes(&self) -> Vec<SkillClass> {
        self.steps.iter().map(|s| s.class).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{POLICY_MAGIC} 1\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{} {} {} {} object={}:{} from={} synthetic={}",
                s.class,
                s.goal_state,
                s.segment.start_frame,
                s.segment.end_frame,
                s.object_id,
                s.object_class,
                s.start_state,
                s.segment.synthetic as u8
            );
            if !s.segment.relative.is_empty() {
                out.push_str("rel");
                for p in &s.segment.relative {
                    for c in p.iter() {
                        out.push(' ');
                        out.push_str(&io_fmt_f64(*c));
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, InferenceError> {
        let err = |line: usize, m: String| InferenceError::PolicyFormat { line, message: m };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, l)) if l.split_whitespace().next() == Some(POLICY_MAGIC) => {}
            _ => return Err(err(1, "missing lfd-policy header".into())),
        }
        let mut steps: Vec<PolicyStep> = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let mut tok = line.split_whitespace();
            let first = tok.next().unwrap_or_default();
            if first == "rel" {
                let Some(step) = steps.last_mut() else {
                    return Err(err(n, "rel line before any step".into()));
                };
                let vals: Vec<f64> = tok
                    .map(|t| t.parse::<f64>().map_err(|_| err(n, format!("bad number {t:?}"))))
                    .collect::<Result<_, _>>()?;
                if !vals.len().is_multiple_of(3) {
                    return Err(err(n, "rel values must come in triples".into()));
                }
                step.segment.relative = vals.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
                continue;
            }
            let class: SkillClass = first.parse().map_err(|e: super::UnknownSkill| err(n, e.to_string()))?;
            let goal_state = tok.next().ok_or_else(|| err(n, "missing goal state".into()))?.to_string();
            let mut frame = |what: &str| -> Result<usize, InferenceError> {
                let t = tok.next().ok_or_else(|| err(n, format!("missing {what}")))?;
                t.parse().map_err(|_| err(n, format!("bad {what} {t:?}")))
            };
            let start_frame = frame("start frame")?;
            let end_frame = frame("end frame")?;
            let (mut object, mut from, mut synthetic) = (None, None, false);
            for kv in tok {
                match kv.split_once('=') {
                    Some(("object", v)) => {
                        let (id, c) = v.split_once(':').ok_or_else(|| err(n, format!("bad object {v:?}")))?;
                        let id: ObjectId = id.parse().map_err(|_| err(n, format!("bad object id {id:?}")))?;
                        object = Some((id, c.to_string()));
                    }
                    Some(("from", v)) => from = Some(v.to_string()),
                    Some(("synthetic", v)) => synthetic = v == "1",
                    _ => return Err(err(n, format!("unexpected token {kv:?}"))),
                }
            }
            let (object_id, object_class) = object.ok_or_else(|| err(n, "missing object=".into()))?;
            steps.push(PolicyStep {
                class,
                start_state: from.unwrap_or_else(|| goal_state.clone()),
                goal_state,
                object_id,
                object_class,
                segment: StepSegment { start_frame, end_frame, relative: Vec::new(), synthetic },
            });
        }
        Ok(Policy { steps })
    }
}

/// A segment annotated with what the inference stage needs from the trace:
/// the interacting object's class and its states at both segment ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSegment {
    pub segment: Segment,
    pub object_class: String,
    pub start_state: String,
    pub end_state: String,
}

/// Reads object class and start/end states of each segment from the trace.
pub fn label_segments(
    trace: &DemonstrationTrace,
    segments: &[Segment],
    db: &ObjectDatabase,
) -> Result<Vec<LabeledSegment>, InferenceError> {
    let frames = trace.frames();
    segments
        .iter()
        .map(|seg| {
            let id = seg.interacting_object;
            let object_class = trace.class_of(id).ok_or(InferenceError::UnknownObject(id))?.to_string();
            if db.get(&object_class).is_none() {
                return Err(InferenceError::UnknownObject(id));
            }
            let state_at = |t: usize| frames.get(t).and_then(|f| f.object(id)).map(|o| o.state.name.clone());
            Ok(LabeledSegment {
                segment: seg.clone(),
                object_class,
                start_state: state_at(seg.start).ok_or(InferenceError::UnknownObject(id))?,
                end_state: state_at(seg.end).ok_or(InferenceError::UnknownObject(id))?,
            })
        })
        .collect()
}

/// Classifies each segment in order (the previous segment's class feeds the
/// next classification), takes the state at each segment's end as its goal,
/// and inserts transitions.
pub fn policy_from_segments(
    segments: &[LabeledSegment],
    tree: &DecisionTree,
    transitions: &TransitionTable,
) -> Result<Policy, InferenceError> {
    let mut prev = None;
    let mut steps = Vec::with_capacity(segments.len());
    for ls in segments {
        let seg = &ls.segment;
        let features = SegmentFeatureVector {
            phi: seg.phi,
            psi: seg.psi,
            ux: seg.ux,
            prev_class: prev,
            object_id: seg.interacting_object,
        };
        let class = tree.classify(&features);
        prev = Some(class);
        steps.push(PolicyStep {
            class,
            goal_state: ls.end_state.clone(),
            start_state: ls.start_state.clone(),
            object_id: seg.interacting_object,
            object_class: ls.object_class.clone(),
            segment: StepSegment {
                start_frame: seg.start,
                end_frame: seg.end,
                relative: seg.relative.clone(),
                synthetic: false,
            },
        });
    }
    insert_transitions(steps, transitions)
}

/// Labels the segments against the trace and builds the policy.
pub fn build_policy(
    trace: &DemonstrationTrace,
    segments: &[Segment],
    tree: &DecisionTree,
    db: &ObjectDatabase,
    transitions: &TransitionTable,
) -> Result<Policy, InferenceError> {
    policy_from_segments(&label_segments(trace, segments, db)?, tree, transitions)
}
