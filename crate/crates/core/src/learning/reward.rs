// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::LearningError;

/// Kronecker-delta reward: `+c1` for landing in the goal state, `−c2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub c1: f64,
    pub c2: f64,
}

impl RewardConfig {
    /// Requires `c2 > c1 > 0`.
    pub fn new(c1: f64, c2: f64) -> Result<Self, LearningError> {
        if c1 > 0.0 && c2 > c1 && c2.is_finite() {
            Ok(Self { c1, c2 })
        } else {
            Err(LearningError::Config(format!("rewards need c2 > c1 > 0, got c1 = {c1}, c2 = {c2}")))
        }
    }
}

/// Reward for the transition into `s_prime` when the goal is `s_star`.
pub fn reward(s_prime: &str, s_star: &str, cfg: &RewardConfig) -> f64 {
    if s_prime == s_star {
        cfg.c1
    } else {
        -cfg.c2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_reward() {
        let cfg = RewardConfig::new(2.0, 5.0).unwrap();
        assert_eq!(reward("peeled", "peeled", &cfg), 2.0);
        assert_eq!(reward("unpeeled", "peeled", &cfg), -5.0);
    }

    #[test]
    fn ordering_enforced() {
        assert!(RewardConfig::new(1.0, 1.0).is_err());
        assert!(RewardConfig::new(0.0, 1.0).is_err());
        assert!(RewardConfig::new(3.0, 2.0).is_err());
    }
}
