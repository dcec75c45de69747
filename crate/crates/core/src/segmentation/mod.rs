// SPDX-License-Identifier: Apache-2.0

//! Physical-interaction keypoint segmentation.
//!
//! Every frame is reduced to binary contact features: `psi` (hand touches the
//! object owning the hand's Voronoi cell) and `phi` (each object in the hand's
//! region of interest touches its nearest other object). Debounced flips of
//! these features are keypoints; keypoints cut the trace into segments.

mod contact;
mod keypoints;
mod segments;
mod voronoi;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec3};
use crate::trace::{DemonstrationTrace, Frame, ObjectDatabase, ObjectId, TraceError};

pub use contact::{contact_phi, contact_psi, frame_features, roi_ids, ContactFeatureFrame};
pub use keypoints::{debounce, detect_keypoints, ContactFeature, Direction, Keypoint};
pub use segments::{segment_trace, Segment};
pub use voronoi::{partition_workspace, VoronoiPartition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    pub contact_distance: f64,
    pub roi_radius: f64,
    pub debounce_window: usize,
    pub min_segment_frames: usize,
    pub min_hand_speed: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        crate::config::PipelineConfig::default().contact
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.contact_distance >= 0.0 && self.contact_distance.is_finite()) {
            return Err("contact.contact_distance must be finite and >= 0".into());
        }
        if !(self.roi_radius > 0.0) {
            return Err("contact.roi_radius must be > 0".into());
        }
        if self.debounce_window == 0 || self.min_segment_frames == 0 {
            return Err("contact.debounce_window and min_segment_frames must be >= 1".into());
        }
        if !(self.min_hand_speed >= 0.0) {
            return Err("contact.min_hand_speed must be >= 0".into());
        }
        Ok(())
    }
}

/// Unit step: 1 iff `v >= 0` (so `step(0.0)` is 1). NaN maps to 0.
pub fn step(v: f64) -> bool {
    v >= 0.0
}

/// Object extents by id; turns centroids into surface boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneModel {
    extents: BTreeMap<ObjectId, Vec3>,
}

impl SceneModel {
    pub fn new(extents: BTreeMap<ObjectId, Vec3>) -> Self {
        Self { extents }
    }

    pub fn from_trace(trace: &DemonstrationTrace, db: &ObjectDatabase) -> Result<Self, TraceError> {
        let mut extents = BTreeMap::new();
        for (&id, class) in trace.classes() {
            let entry = db.get(class).ok_or_else(|| TraceError::UnknownClass(class.clone()))?;
            extents.insert(id, entry.extent());
        }
        Ok(Self { extents })
    }

    pub fn extent(&self, id: ObjectId) -> Vec3 {
        self.extents.get(&id).copied().unwrap_or_else(Vec3::zeros)
    }

    pub fn object_box(&self, frame: &Frame, id: ObjectId) -> Option<Aabb> {
        frame.object(id).map(|o| Aabb::from_center_extent(&o.centroid, &self.extent(id)))
    }
}
