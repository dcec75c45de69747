// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{frame_features, ContactParams, SceneModel};
use crate::trace::{DemonstrationTrace, ObjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContactFeature {
    Psi,
    Phi(ObjectId),
}

impl fmt::Display for ContactFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactFeature::Psi => f.write_str("psi"),
            ContactFeature::Phi(id) => write!(f, "phi:{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Make,
    Break,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Make => "make",
            Direction::Break => "break",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Keypoint {
    pub frame: usize,
    pub feature: ContactFeature,
    pub direction: Direction,
}

/// Debounces a binary series: a change at frame `t` is accepted only when the
/// new value holds for `window` frames starting at `t`. Changes too close to
/// the end of the series to be confirmed are dropped.
pub fn debounce(raw: &[bool], window: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(raw.len());
    let Some(&first) = raw.first() else { return out };
    let mut cur = first;
    out.push(cur);
    for t in 1..raw.len() {
        if raw[t] != cur && t + window <= raw.len() && raw[t..t + window].iter().all(|&v| v == raw[t]) {
            cur = raw[t];
        }
        out.push(cur);
    }
    out
}

/// Debounced per-frame features of a whole trace.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DebouncedFeatures {
    pub psi: Vec<bool>,
    /// Per object; 0 while the object is outside the hand ROI.
    pub phi: BTreeMap<ObjectId, Vec<bool>>,
    pub owners: Vec<ObjectId>,
}

impl DebouncedFeatures {
    pub fn compute(trace: &DemonstrationTrace, scene: &SceneModel, params: &ContactParams) -> Self {
        let raw = frame_features(trace, scene, params);
        let psi_raw: Vec<bool> = raw.iter().map(|f| f.psi).collect();
        let phi = trace
            .object_ids()
            .map(|id| {
                let series: Vec<bool> = raw.iter().map(|f| f.phi.get(&id).copied().unwrap_or(false)).collect();
                (id, debounce(&series, params.debounce_window))
            })
            .collect();
        Self {
            psi: debounce(&psi_raw, params.debounce_window),
            phi,
            owners: raw.iter().map(|f| f.owner_id).collect(),
        }
    }

    pub fn any_phi(&self, t: usize) -> bool {
        self.phi.values().any(|s| s[t])
    }

    pub fn keypoints(&self) -> Vec<Keypoint> {
        let mut out = Vec::new();
        let mut push_flips = |series: &[bool], feature: ContactFeature| {
            for t in 1..series.len() {
                if series[t] != series[t - 1] {
                    let direction = if series[t] { Direction::Make } else { Direction::Break };
                    out.push(Keypoint { frame: t, feature, direction });
                }
            }
        };
        push_flips(&self.psi, ContactFeature::Psi);
        for (&id, s) in &self.phi {
            push_flips(s, ContactFeature::Phi(id));
        }
        out.sort();
        out
    }
}

/// One keypoint per debounced flip of psi or any phi entry, ordered by frame.
pub fn detect_keypoints(trace: &DemonstrationTrace, scene: &SceneModel, params: &ContactParams) -> Vec<Keypoint> {
    DebouncedFeatures::compute(trace, scene, params).keypoints()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn blip_is_ignored() {
        // Hand-built 10-frame series with a one-frame contact blip.
        assert_eq!(debounce(&bits("0000100000"), 3), bits("0000000000"));
        assert_eq!(debounce(&bits("0001100000"), 3), bits("0000000000"));
    }

    #[test]
    fn held_change_is_kept() {
        assert_eq!(debounce(&bits("0001110000"), 3), bits("0001110000"));
        assert_eq!(debounce(&bits("0001111011"), 3), bits("0001111111"));
    }

    #[test]
    fn unconfirmed_tail_change_dropped() {
        assert_eq!(debounce(&bits("0000000011"), 3), bits("0000000000"));
    }

    proptest! {
        #[test]
        fn debounced_runs_are_long(raw in proptest::collection::vec(any::<bool>(), 1..200), w in 1usize..6) {
            let d = debounce(&raw, w);
            prop_assert_eq!(d.len(), raw.len());
            prop_assert_eq!(d[0], raw[0]);
            // Every accepted change is backed by `w` equal raw frames.
            for t in 1..d.len() {
                if d[t] != d[t - 1] {
                    prop_assert!(raw[t..t + w].iter().all(|&v| v == d[t]));
                }
            }
        }

        #[test]
        fn window_one_is_identity(raw in proptest::collection::vec(any::<bool>(), 1..100)) {
            prop_assert_eq!(debounce(&raw, 1), raw);
        }
    }
}
