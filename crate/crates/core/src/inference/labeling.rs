// SPDX-License-Identifier: Apache-2.0

use serde::Deserialize;

use super::{InferenceError, SegmentFeatureVector, SkillClass};
use crate::trace::ObjectId;

const BUILTIN_TABLE: &str = include_str!("../../../../data/skill_labels.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    class: SkillClass,
    psi: Vec<u8>,
    phi: Vec<u8>,
    ux: Vec<u8>,
    prev: Vec<String>,
}

/// Data table mapping canonical segment features to skill classes; the
/// source of the decision tree's training set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelingTable {
    jitter_object_ids: Vec<ObjectId>,
    rows: Vec<Row>,
}

fn parse_prev(s: &str) -> Result<Option<SkillClass>, InferenceError> {
    if s == "None" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|e: super::UnknownSkill| InferenceError::Table(e.to_string()))
    }
}

impl LabelingTable {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_TABLE).expect("builtin labeling table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, InferenceError> {
        let t: LabelingTable = toml::from_str(text).map_err(|e| InferenceError::Table(e.to_string()))?;
        if t.jitter_object_ids.is_empty() || t.rows.is_empty() {
            return Err(InferenceError::Table("table needs rows and at least one object id".into()));
        }
        for r in &t.rows {
            for p in &r.prev {
                parse_prev(p)?;
            }
            let bits = r.psi.iter().chain(&r.phi).chain(&r.ux);
            if bits.clone().any(|&b| b > 1) || r.psi.is_empty() || r.phi.is_empty() || r.ux.is_empty() || r.prev.is_empty() {
                return Err(InferenceError::Table(format!("bad row for {}", r.class)));
            }
        }
        Ok(t)
    }

    fn combos(&self, row: &Row) -> Vec<(bool, bool, bool, Option<SkillClass>)> {
        let mut out = Vec::new();
        for p in &row.prev {
            let prev = parse_prev(p).expect("validated");
            for &psi in &row.psi {
                for &phi in &row.phi {
                    for &ux in &row.ux {
                        out.push((phi == 1, psi == 1, ux == 1, prev));
                    }
                }
            }
        }
        out
    }

    /// Every row expanded over its value lists and the jitter object ids.
    pub fn training_set(&self) -> Vec<(SegmentFeatureVector, SkillClass)> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (phi, psi, ux, prev_class) in self.combos(row) {
                for &object_id in &self.jitter_object_ids {
                    out.push((SegmentFeatureVector { phi, psi, ux, prev_class, object_id }, row.class));
                }
            }
        }
        out
    }

    /// The first listed feature vector for `class`.
    pub fn canonical(&self, class: SkillClass) -> Option<SegmentFeatureVector> {
        let row = self.rows.iter().find(|r| r.class == class)?;
        let (phi, psi, ux, prev_class) = self.combos(row)[0];
        Some(SegmentFeatureVector { phi, psi, ux, prev_class, object_id: self.jitter_object_ids[0] })
    }
}
