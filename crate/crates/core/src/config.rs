// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration. Defaults come from the shipped `config/default.toml`,
//! so each tunable constant lives in exactly one place.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environment::EnvironmentParams;
use crate::execution::{ControllerGains, ExecutionParams};
use crate::learning::LearningConfig;
use crate::segmentation::ContactParams;

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../../config/default.toml");

/// Environment variable naming the default config path.
pub const CONFIG_ENV_VAR: &str = "LFD_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub generator: u64,
    pub learner: u64,
    pub environment: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub contact: ContactParams,
    pub gains: ControllerGains,
    pub execution: ExecutionParams,
    pub learning: LearningConfig,
    pub environment: EnvironmentParams,
    pub seeds: Seeds,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG_TOML).expect("shipped default config is valid")
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Loads `path` if given, else the file named by `LFD_CONFIG`, else the defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        if let Some(p) = path {
            return Self::load(p);
        }
        match std::env::var_os(CONFIG_ENV_VAR) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.contact.validate().map_err(ConfigError::Invalid)?;
        self.gains.validate().map_err(ConfigError::Invalid)?;
        self.execution.validate().map_err(ConfigError::Invalid)?;
        self.learning.validate().map_err(ConfigError::Invalid)?;
        self.environment.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_defaults_parse() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.learning.gamma, 0.3);
        assert_eq!(cfg.learning.reward_success, 2.0);
        assert_eq!(cfg.learning.penalty_failure, 5.0);
        assert_eq!(cfg.learning.base_force, 0.5);
        assert_eq!(cfg.learning.force_increment, 0.3);
        assert_eq!(cfg.environment.peel_state_fraction, 0.10);
        assert_eq!(cfg.contact.debounce_window, 3);
    }

    #[test]
    fn invalid_section_rejected() {
        let bad = DEFAULT_CONFIG_TOML.replace("penalty_failure = 5.0", "penalty_failure = 1.0");
        assert!(matches!(PipelineConfig::from_toml_str(&bad), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(PipelineConfig::default().hash(), PipelineConfig::default().hash());
    }
}
