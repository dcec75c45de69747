// SPDX-License-Identifier: Apache-2.0

//! Scenario files: which objects exist, where, and the sensor setup.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::trace::ObjectId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioObjectSpec {
    pub id: ObjectId,
    pub class: String,
    pub center: [f64; 3],
    /// Overrides the database stiffness, N/m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    /// Overrides the database peel threshold, N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peel_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvScenario {
    pub name: String,
    /// Force-sensor noise on/off.
    #[serde(default)]
    pub noise: bool,
    /// Sensor-noise seed.
    #[serde(default)]
    pub seed: u64,
    /// Tool-tip position the arm starts from.
    pub start_tip: [f64; 3],
    pub objects: Vec<ScenarioObjectSpec>,
}

impl EnvScenario {
    pub fn from_toml_str(text: &str) -> Result<Self, EnvError> {
        let s: Self = toml::from_str(text).map_err(|e| EnvError::Scenario(e.to_string()))?;
        if s.objects.is_empty() {
            return Err(EnvError::Scenario("scenario has no objects".into()));
        }
        let mut ids: Vec<_> = s.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(EnvError::Scenario("duplicate object id".into()));
        }
        for o in &s.objects {
            if o.stiffness.is_some_and(|k| !(k > 0.0)) || o.peel_threshold.is_some_and(|t| !(t >= 0.0)) {
                return Err(EnvError::Scenario(format!("object {}: bad physics override", o.id)));
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Scenario(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Returns the scenario with sensor noise switched on or off.
    pub fn with_noise(mut self, noise: bool) -> Self {
        self.noise = noise;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_duplicates() {
        let ok = "name='a'\nstart_tip=[0.1,0,0.3]\n[[objects]]\nid=1\nclass='cucumber'\ncenter=[0.45,0,0.02]\n";
        let s = EnvScenario::from_toml_str(ok).unwrap();
        assert!(!s.noise);
        assert_eq!(EnvScenario::from_toml_str(&s.to_toml_string()).unwrap(), s);
        let dup = format!("{ok}[[objects]]\nid=1\nclass='carrot'\ncenter=[0,0,0]\n");
        assert!(EnvScenario::from_toml_str(&dup).is_err());
    }
}
