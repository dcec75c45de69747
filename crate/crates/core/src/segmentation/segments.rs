// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::keypoints::DebouncedFeatures;
use super::{step, ContactParams, Keypoint, SceneModel};
use crate::geometry::Vec3;
use crate::trace::{DemonstrationTrace, ObjectId};

/// A demonstration slice between keypoints, frames `start..=end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub psi: bool,
    pub phi: bool,
    /// Hand position relative to the interacting object's centroid, one per frame.
    pub relative: Vec<Vec3>,
    /// Absolute hand velocity between consecutive frames, m/s.
    pub hand_velocity: Vec<Vec3>,
    /// 1 iff the mean rate of change of the hand-object distance is >= 0.
    pub ux: bool,
    /// 1 iff the mean hand speed is at least `min_hand_speed`.
    pub uy: bool,
    pub interacting_object: ObjectId,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn majority(values: impl Iterator<Item = bool> + Clone) -> bool {
    let n = values.clone().count();
    let mut it = values.clone();
    let first = it.next().unwrap_or(false);
    let ones = values.filter(|&v| v).count();
    match (2 * ones).cmp(&n) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => first,
    }
}

fn majority_id(ids: impl Iterator<Item = ObjectId>) -> Option<ObjectId> {
    let mut counts: BTreeMap<ObjectId, usize> = BTreeMap::new();
    for id in ids {
        *counts.entry(id).or_default() += 1;
    }
    // max_by_key returns the last maximum; iterate in reverse so the lowest id wins ties.
    counts.into_iter().rev().max_by_key(|&(_, c)| c).map(|(id, _)| id)
}

/// Frame ranges cut at keypoints, with ranges shorter than `min_frames`
/// merged into the preceding range (a short leading range merges forward).
pub(crate) fn boundaries(n_frames: usize, keypoints: &[Keypoint], min_frames: usize) -> Vec<(usize, usize)> {
    let last = n_frames - 1;
    let mut cuts: Vec<usize> = keypoints.iter().map(|k| k.frame).filter(|&f| f > 0 && f <= last).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut ranges = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for c in cuts {
        ranges.push((start, c - 1));
        start = c;
    }
    ranges.push((start, last));

    let mut merged: Vec<(usize, usize)> = Vec::new();
    let mut carry = None;
    for (s, e) in ranges {
        let s = carry.take().unwrap_or(s);
        if e - s + 1 < min_frames {
            match merged.last_mut() {
                Some(prev) => prev.1 = e,
                None => carry = Some(s),
            }
        } else {
            merged.push((s, e));
        }
    }
    if let Some(s) = carry {
        merged.push((s, last));
    }
    merged
}

/// Cuts the trace at `keypoints` and computes per-segment features.
///
/// A contact segment's relative trajectory is taken against the object the
/// hand touches; a free segment uses the object touched in the next contact
/// segment, or the last touched object when no contact follows.
pub fn segment_trace(
    trace: &DemonstrationTrace,
    scene: &SceneModel,
    keypoints: &[Keypoint],
    params: &ContactParams,
) -> Vec<Segment> {
    let feats = DebouncedFeatures::compute(trace, scene, params);
    let ranges = boundaries(trace.len(), keypoints, params.min_segment_frames);

    let psi: Vec<bool> = ranges.iter().map(|&(s, e)| majority((s..=e).map(|t| feats.psi[t]))).collect();
    let phi: Vec<bool> = ranges.iter().map(|&(s, e)| majority((s..=e).map(|t| feats.any_phi(t)))).collect();
    let contact_obj: Vec<Option<ObjectId>> = ranges
        .iter()
        .zip(&psi)
        .map(|(&(s, e), &p)| {
            if !p {
                return None;
            }
            majority_id((s..=e).filter(|&t| feats.psi[t]).map(|t| feats.owners[t]))
                .or_else(|| majority_id((s..=e).map(|t| feats.owners[t])))
        })
        .collect();

    let frames = trace.frames();
    ranges
        .iter()
        .enumerate()
        .map(|(i, &(s, e))| {
            let object = contact_obj[i]
                .or_else(|| contact_obj[i + 1..].iter().flatten().next().copied())
                .or_else(|| contact_obj[..i].iter().rev().flatten().next().copied())
                .or_else(|| majority_id((s..=e).map(|t| feats.owners[t])))
                .expect("segment has frames");
            let relative: Vec<Vec3> = (s..=e)
                .map(|t| {
                    let f = &frames[t];
                    f.hand - f.object(object).expect("validated object set").centroid
                })
                .collect();
            let mut dist_rates = Vec::new();
            let mut hand_velocity = Vec::new();
            for t in s..e {
                let dt = frames[t + 1].time - frames[t].time;
                let k = t - s;
                dist_rates.push((relative[k + 1].norm() - relative[k].norm()) / dt);
                hand_velocity.push((frames[t + 1].hand - frames[t].hand) / dt);
            }
            let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
            let speeds: Vec<f64> = hand_velocity.iter().map(|v| v.norm()).collect();
            Segment {
                start: s,
                end: e,
                psi: psi[i],
                phi: phi[i],
                ux: step(mean(&dist_rates)),
                uy: !speeds.is_empty() && step(mean(&speeds) - params.min_hand_speed),
                relative,
                hand_velocity,
                interacting_object: object,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{ContactFeature, Direction};

    fn kp(frame: usize) -> Keypoint {
        Keypoint { frame, feature: ContactFeature::Psi, direction: Direction::Make }
    }

    #[test]
    fn fencepost() {
        assert_eq!(boundaries(30, &[kp(10), kp(20)], 5), vec![(0, 9), (10, 19), (20, 29)]);
        assert_eq!(boundaries(30, &[], 5), vec![(0, 29)]);
    }

    #[test]
    fn short_segments_merge_backwards() {
        assert_eq!(boundaries(30, &[kp(10), kp(12)], 5), vec![(0, 11), (12, 29)]);
        assert_eq!(boundaries(30, &[kp(2), kp(12)], 5), vec![(0, 11), (12, 29)]);
        assert_eq!(boundaries(30, &[kp(27)], 5), vec![(0, 29)]);
        assert_eq!(boundaries(3, &[kp(1)], 5), vec![(0, 2)]);
    }

    #[test]
    fn majority_tie_uses_first() {
        assert!(majority([true, false].into_iter()));
        assert!(!majority([false, true].into_iter()));
        assert!(majority([false, true, true].into_iter()));
    }

    #[test]
    fn majority_id_prefers_lowest_on_tie() {
        assert_eq!(majority_id([3, 2, 3, 2].into_iter()), Some(2));
        assert_eq!(majority_id([3, 3, 2].into_iter()), Some(3));
    }
}
