// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TraceError;
use crate::geometry::Vec3;

const BUILTIN_DB: &str = include_str!("../../../../data/object_db.toml");

/// One object class of the database.
///
/// `peel_force_threshold` is simulator ground truth: the learner never reads it.
/// `mass` is carried for completeness and not consumed downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectClass {
    pub stiffness: f64,
    #[serde(default)]
    pub mass: f64,
    pub extent: [f64; 3],
    pub states: Vec<String>,
    pub peel_force_threshold: f64,
    pub strip_fraction: f64,
}

impl ObjectClass {
    pub fn extent(&self) -> Vec3 {
        Vec3::from(self.extent)
    }

    /// Index of a state label, used as the RL state id.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDatabase {
    entries: BTreeMap<String, ObjectClass>,
}

impl ObjectDatabase {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_DB).expect("builtin object database is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TraceError> {
        let entries: BTreeMap<String, ObjectClass> = toml::from_str(text)
            .map_err(|e| TraceError::Parse { line: 0, message: e.to_string() })?;
        let db = Self { entries };
        db.validate()?;
        Ok(db)
    }

    pub fn load(path: &Path) -> Result<Self, TraceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TraceError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn get(&self, class: &str) -> Option<&ObjectClass> {
        self.entries.get(class)
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &ObjectClass)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn validate(&self) -> Result<(), TraceError> {
        for (name, e) in &self.entries {
            let bad = |what: &str| Err(TraceError::Invariant(format!("object class {name}: {what}")));
            if !(e.stiffness > 0.0) {
                return bad("stiffness must be > 0");
            }
            if !(e.peel_force_threshold > 0.0) {
                return bad("peel_force_threshold must be > 0");
            }
            if e.states.is_empty() {
                return bad("state labels must be non-empty");
            }
            if !e.extent.iter().all(|&x| x > 0.0 && x.is_finite()) {
                return bad("extent must be positive");
            }
            if !(e.strip_fraction > 0.0 && e.strip_fraction <= 1.0) {
                return bad("strip_fraction must be in (0, 1]");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_entries() {
        let db = ObjectDatabase::builtin();
        let c = db.get("cucumber").unwrap();
        assert_eq!(c.peel_force_threshold, 1.5);
        assert_eq!(c.state_index("peeled"), Some(1));
        assert!(db.get("potato").unwrap().peel_force_threshold == 2.5);
    }

    #[test]
    fn rejects_nonpositive_stiffness() {
        let text = "[x]\nstiffness = 0.0\nextent = [0.1,0.1,0.1]\nstates = [\"a\"]\npeel_force_threshold = 1.0\nstrip_fraction = 0.1\n";
        assert!(ObjectDatabase::from_toml_str(text).is_err());
    }
}
