// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::LearningError;
use crate::geometry::Vec3;

/// The demonstrated baseline trajectory replayed at a fixed normal force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactTrajectoryAction {
    pub action_id: usize,
    /// Hand positions relative to the object; empty means "use the policy step's own".
    pub base_trajectory: Vec<Vec3>,
    /// N.
    pub target_force: f64,
}

/// Append-only action list; action `k` targets `base + k·increment`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionSet {
    actions: Vec<ContactTrajectoryAction>,
}

impl ActionSet {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&ContactTrajectoryAction> {
        self.actions.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContactTrajectoryAction> {
        self.actions.iter()
    }

    pub fn forces(&self) -> Vec<f64> {
        self.actions.iter().map(|a| a.target_force).collect()
    }

    /// Checks ids are contiguous from 0 and forces follow the ladder.
    pub fn validate(&self, base: f64, increment: f64) -> Result<(), String> {
        for (k, a) in self.actions.iter().enumerate() {
            if a.action_id != k {
                return Err(format!("action ids must be contiguous; found {} at position {k}", a.action_id));
            }
            let expected = base + k as f64 * increment;
            if (a.target_force - expected).abs() > 1e-9 {
                return Err(format!("action {k} force {} differs from ladder value {expected}", a.target_force));
            }
        }
        Ok(())
    }
}

/// Appends the next force-ladder action. Errors if it would exceed `max_force`.
pub fn grow_action(
    set: &mut ActionSet,
    baseline: &[Vec3],
    base_force: f64,
    increment: f64,
    max_force: f64,
) -> Result<ContactTrajectoryAction, LearningError> {
    let k = set.actions.len();
    let force = base_force + k as f64 * increment;
    if force > max_force + 1e-9 {
        return Err(LearningError::ActionSpaceExhausted { next: force, max: max_force });
    }
    let action = ContactTrajectoryAction { action_id: k, base_trajectory: baseline.to_vec(), target_force: force };
    set.actions.push(action.clone());
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ladder_from_empty() {
        let mut s = ActionSet::default();
        assert_eq!(grow_action(&mut s, &[], 0.5, 0.3, 10.0).unwrap().target_force, 0.5);
        grow_action(&mut s, &[], 0.5, 0.3, 10.0).unwrap();
        let a = grow_action(&mut s, &[], 0.5, 0.3, 10.0).unwrap();
        assert_eq!(a.action_id, 2);
        assert!((a.target_force - 1.1).abs() < 1e-12);
    }

    #[test]
    fn ceiling_halts() {
        let mut s = ActionSet::default();
        grow_action(&mut s, &[], 0.5, 0.3, 0.8).unwrap();
        grow_action(&mut s, &[], 0.5, 0.3, 0.8).unwrap();
        assert!(matches!(grow_action(&mut s, &[], 0.5, 0.3, 0.8), Err(LearningError::ActionSpaceExhausted { .. })));
        assert_eq!(s.len(), 2);
    }

    proptest! {
        #[test]
        fn ladder_law(n in 1usize..30) {
            let mut s = ActionSet::default();
            for _ in 0..n {
                grow_action(&mut s, &[], 0.5, 0.3, 10.0).unwrap();
            }
            let f = s.forces();
            prop_assert_eq!(*f.last().unwrap(), 0.5 + 0.3 * (n - 1) as f64);
            prop_assert!(f.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(s.validate(0.5, 0.3).is_ok());
        }
    }
}
