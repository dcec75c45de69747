// SPDX-License-Identifier: Apache-2.0

//! Demonstration trace model: per-frame hand and object records extracted
//! from a single demonstration, the object database, and trace file I/O.

mod db;
mod io;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec3};

pub use db::{ObjectClass, ObjectDatabase};
pub use io::{load_trace, parse_trace, write_trace, TRACE_MAGIC};
pub(crate) use io::fmt_f64 as io_fmt_f64;
pub use synth::{
    synthesize_trace, GroundTruth, Phase, ScenarioObject, ScenarioSpec, TruthKeypoint,
};

pub type ObjectId = u32;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invariant(String),
    #[error("unknown object class {0:?}")]
    UnknownClass(String),
    #[error("objects {0} and {1} overlap")]
    OverlappingObjects(ObjectId, ObjectId),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

/// Symbolic object state with optional scalar attributes (e.g. `peel_fraction`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, f64>,
}

impl StateLabel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), attributes: BTreeMap::new() }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: f64) -> Self {
        self.attributes.insert(key.into(), value);
        self
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub object_id: ObjectId,
    pub centroid: Vec3,
    pub state: StateLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub time: f64,
    pub hand: Vec3,
    pub wrist: Vec3,
    pub hand_tip: Vec3,
    pub objects: Vec<ObjectRecord>,
}

impl Frame {
    pub fn object(&self, id: ObjectId) -> Option<&ObjectRecord> {
        self.objects.iter().find(|o| o.object_id == id)
    }

    fn object_ids(&self) -> BTreeSet<ObjectId> {
        self.objects.iter().map(|o| o.object_id).collect()
    }
}

/// A validated demonstration. Construct through [`DemonstrationTrace::new`],
/// [`load_trace`] or [`synthesize_trace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationTrace {
    frames: Vec<Frame>,
    workspace: Aabb,
    classes: BTreeMap<ObjectId, String>,
}

impl DemonstrationTrace {
    pub fn new(
        frames: Vec<Frame>,
        workspace: Aabb,
        classes: BTreeMap<ObjectId, String>,
        db: &ObjectDatabase,
    ) -> Result<Self, TraceError> {
        let trace = Self { frames, workspace, classes };
        trace.validate(db)?;
        Ok(trace)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn workspace(&self) -> &Aabb {
        &self.workspace
    }

    pub fn classes(&self) -> &BTreeMap<ObjectId, String> {
        &self.classes
    }

    pub fn class_of(&self, id: ObjectId) -> Option<&str> {
        self.classes.get(&id).map(String::as_str)
    }

    pub fn object_ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.classes.keys().copied()
    }

    fn validate(&self, db: &ObjectDatabase) -> Result<(), TraceError> {
        let inv = |m: String| Err(TraceError::Invariant(m));
        if self.frames.len() < 2 {
            return inv(format!("trace needs at least 2 frames, got {}", self.frames.len()));
        }
        if !self.workspace.is_valid() {
            return inv("workspace bounds are not a valid box".into());
        }
        for class in self.classes.values() {
            if db.get(class).is_none() {
                return Err(TraceError::UnknownClass(class.clone()));
            }
        }
        let expected: BTreeSet<ObjectId> = self.classes.keys().copied().collect();
        let mut prev_time = f64::NEG_INFINITY;
        for (k, f) in self.frames.iter().enumerate() {
            if f.index != k {
                return inv(format!("frame index {} out of sequence at frame {k}", f.index));
            }
            if !f.time.is_finite() || f.time <= prev_time {
                return inv(format!("time not strictly increasing at frame {k}"));
            }
            prev_time = f.time;
            if f.objects.is_empty() {
                return inv(format!("frame {k} has no objects"));
            }
            let ids = f.object_ids();
            if ids.len() != f.objects.len() {
                return inv(format!("duplicate object id at frame {k}"));
            }
            if ids != expected {
                return inv(format!("object set changed at frame {k}"));
            }
            let mut points = vec![("hand", f.hand), ("wrist", f.wrist), ("hand_tip", f.hand_tip)];
            points.extend(f.objects.iter().map(|o| ("object centroid", o.centroid)));
            for (what, p) in points {
                if !p.iter().all(|c| c.is_finite()) {
                    return inv(format!("non-finite {what} position at frame {k}"));
                }
                if !self.workspace.contains(&p) {
                    return inv(format!("{what} outside workspace bounds at frame {k}"));
                }
            }
            for o in &f.objects {
                let class = &self.classes[&o.object_id];
                let entry = db.get(class).expect("checked above");
                if !entry.states.contains(&o.state.name) {
                    return inv(format!(
                        "state {:?} is not a {class} state at frame {k}",
                        o.state.name
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(index: usize, time: f64, ids: &[ObjectId]) -> Frame {
        let p = Vec3::new(0.1, 0.1, 0.1);
        Frame {
            index,
            time,
            hand: p,
            wrist: p,
            hand_tip: p,
            objects: ids
                .iter()
                .map(|&id| ObjectRecord { object_id: id, centroid: p, state: StateLabel::new("unpeeled") })
                .collect(),
        }
    }

    fn classes(ids: &[ObjectId]) -> BTreeMap<ObjectId, String> {
        ids.iter().map(|&id| (id, "cucumber".to_string())).collect()
    }

    fn bounds() -> Aabb {
        Aabb::new([0.0; 3], [1.0; 3])
    }

    #[test]
    fn rejects_single_frame() {
        let db = ObjectDatabase::builtin();
        let err = DemonstrationTrace::new(vec![frame(0, 0.0, &[1])], bounds(), classes(&[1]), &db);
        assert!(matches!(err, Err(TraceError::Invariant(_))));
    }

    #[test]
    fn rejects_time_regression() {
        let db = ObjectDatabase::builtin();
        let frames = vec![frame(0, 0.0, &[1]), frame(1, 0.1, &[1]), frame(2, 0.1, &[1])];
        let err = DemonstrationTrace::new(frames, bounds(), classes(&[1]), &db).unwrap_err();
        assert!(err.to_string().contains("time not strictly increasing"));
    }

    #[test]
    fn rejects_changed_object_set() {
        let db = ObjectDatabase::builtin();
        let frames = vec![frame(0, 0.0, &[1, 2]), frame(1, 0.1, &[1])];
        let err = DemonstrationTrace::new(frames, bounds(), classes(&[1, 2]), &db).unwrap_err();
        assert_eq!(err.to_string(), "object set changed at frame 1");
    }

    #[test]
    fn rejects_unknown_state() {
        let db = ObjectDatabase::builtin();
        let mut frames = vec![frame(0, 0.0, &[1]), frame(1, 0.1, &[1])];
        frames[1].objects[0].state = StateLabel::new("sliced");
        assert!(DemonstrationTrace::new(frames, bounds(), classes(&[1]), &db).is_err());
    }

    #[test]
    fn rejects_out_of_bounds() {
        let db = ObjectDatabase::builtin();
        let mut frames = vec![frame(0, 0.0, &[1]), frame(1, 0.1, &[1])];
        frames[1].hand.x = 2.0;
        let err = DemonstrationTrace::new(frames, bounds(), classes(&[1]), &db).unwrap_err();
        assert!(err.to_string().contains("outside workspace"));
    }
}
