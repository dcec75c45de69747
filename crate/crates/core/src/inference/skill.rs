// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A priori skills the robot can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SkillClass {
    Approach,
    Grasp,
    Transport,
    Retract,
    Scoop,
    Unscoop,
    GuardedMove,
    VisualServoing,
    MoveWithContact,
    MoveToContact,
}

impl SkillClass {
    pub const ALL: [SkillClass; 10] = [
        SkillClass::Approach,
        SkillClass::Grasp,
        SkillClass::Transport,
        SkillClass::Retract,
        SkillClass::Scoop,
        SkillClass::Unscoop,
        SkillClass::GuardedMove,
        SkillClass::VisualServoing,
        SkillClass::MoveWithContact,
        SkillClass::MoveToContact,
    ];

    /// Force-based skills run the impedance controller; the rest are positional.
    pub fn is_force_based(self) -> bool {
        matches!(
            self,
            SkillClass::MoveToContact | SkillClass::MoveWithContact | SkillClass::GuardedMove | SkillClass::Grasp
        )
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).expect("listed")
    }

    pub fn name(self) -> &'static str {
        match self {
            SkillClass::Approach => "Approach",
            SkillClass::Grasp => "Grasp",
            SkillClass::Transport => "Transport",
            SkillClass::Retract => "Retract",
            SkillClass::Scoop => "Scoop",
            SkillClass::Unscoop => "Unscoop",
            SkillClass::GuardedMove => "GuardedMove",
            SkillClass::VisualServoing => "VisualServoing",
            SkillClass::MoveWithContact => "MoveWithContact",
            SkillClass::MoveToContact => "MoveToContact",
        }
    }
}

impl fmt::Display for SkillClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown skill class {0:?}")]
pub struct UnknownSkill(pub String);

impl FromStr for SkillClass {
    type Err = UnknownSkill;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // "ContactTrajectory" is accepted as another name for MoveWithContact.
        if s == "ContactTrajectory" {
            return Ok(SkillClass::MoveWithContact);
        }
        Self::ALL.iter().copied().find(|c| c.name() == s).ok_or_else(|| UnknownSkill(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_based_split() {
        let force: Vec<_> = SkillClass::ALL.iter().filter(|c| c.is_force_based()).collect();
        assert_eq!(force.len(), 4);
        assert!(!SkillClass::Approach.is_force_based());
        assert!(SkillClass::Grasp.is_force_based());
    }

    #[test]
    fn names_round_trip() {
        for c in SkillClass::ALL {
            assert_eq!(c.name().parse::<SkillClass>().unwrap(), c);
        }
        assert!("Peel".parse::<SkillClass>().is_err());
    }
}
