// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{partition_workspace, ContactParams, SceneModel, VoronoiPartition};
use crate::trace::{DemonstrationTrace, Frame, ObjectId};

/// Raw (not yet debounced) contact features of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactFeatureFrame {
    pub frame: usize,
    pub psi: bool,
    pub phi: BTreeMap<ObjectId, bool>,
    pub owner_id: ObjectId,
    pub roi_ids: BTreeSet<ObjectId>,
}

/// Hand contact with the object owning the hand's cell: the wrist-to-tip
/// segment comes within `contact_distance` of that object's box.
pub fn contact_psi(frame: &Frame, partition: &VoronoiPartition, scene: &SceneModel, params: &ContactParams) -> bool {
    let owner = partition.owner(&frame.hand);
    match scene.object_box(frame, owner) {
        Some(b) => b.distance_to_segment(&frame.wrist, &frame.hand_tip) <= params.contact_distance,
        None => false,
    }
}

/// Objects whose centroid lies within the ROI sphere about the hand.
pub fn roi_ids(frame: &Frame, params: &ContactParams) -> BTreeSet<ObjectId> {
    frame
        .objects
        .iter()
        .filter(|o| (o.centroid - frame.hand).norm() <= params.roi_radius)
        .map(|o| o.object_id)
        .collect()
}

/// For each ROI object: 1 iff its surface is within `contact_distance` of the
/// nearest other object (the hand is not an object). Empty when the scene has
/// a single object.
pub fn contact_phi(
    frame: &Frame,
    roi: &BTreeSet<ObjectId>,
    scene: &SceneModel,
    params: &ContactParams,
) -> BTreeMap<ObjectId, bool> {
    let mut out = BTreeMap::new();
    if frame.objects.len() < 2 {
        return out;
    }
    for &id in roi {
        let Some(b) = scene.object_box(frame, id) else { continue };
        let nearest = frame
            .objects
            .iter()
            .filter(|o| o.object_id != id)
            .filter_map(|o| scene.object_box(frame, o.object_id))
            .map(|ob| b.distance_to_box(&ob))
            .fold(f64::INFINITY, f64::min);
        out.insert(id, nearest <= params.contact_distance);
    }
    out
}

pub fn frame_features(
    trace: &DemonstrationTrace,
    scene: &SceneModel,
    params: &ContactParams,
) -> Vec<ContactFeatureFrame> {
    trace
        .frames()
        .iter()
        .map(|f| {
            let partition = partition_workspace(f, trace.workspace()).expect("validated traces have objects");
            let roi = roi_ids(f, params);
            ContactFeatureFrame {
                frame: f.index,
                psi: contact_psi(f, &partition, scene, params),
                phi: contact_phi(f, &roi, scene, params),
                owner_id: partition.owner(&f.hand),
                roi_ids: roi,
            }
        })
        .collect()
}
