// SPDX-License-Identifier: Apache-2.0

//! Skill controllers running a simulated arm against the simulated world.

mod arm;
mod control;
mod skills;

use serde::{Deserialize, Serialize};

pub use arm::{ArmModel, TOOL_DOWN};
pub use control::{
    feedback_move_to_contact, impedance_step, positional_step, ControllerGains, ImpedanceOutput, TorqueLimits,
};
pub use skills::{execute_policy, execute_skill, ActionBindings, Robot, SkillExecutor, SkillOutcome};

use crate::environment::EnvError;

#[derive(Debug, thiserror::Error)]
pub enum ExecutionError {
    #[error("non-finite feedback: {0}")]
    NonFinite(String),
    #[error("step {step} ({class}) needs a contact-trajectory action")]
    MissingAction { step: usize, class: crate::inference::SkillClass },
    #[error("start pose {0:?} is out of reach")]
    Unreachable([f64; 3]),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionParams {
    /// Minimum contact force that counts as contact, N.
    pub min_contact_force: f64,
    /// MoveToContact regulates to `min_contact_force + contact_margin`.
    pub contact_margin: f64,
    /// Width of the accepted contact-force band above the minimum, N.
    pub force_band: f64,
    /// Readings averaged to decide a force has settled.
    pub settle_steps: usize,
    /// Positional goal tolerance, m.
    pub position_tolerance: f64,
    /// Height above the top face where positional approaches stop, m.
    pub approach_clearance: f64,
    pub control_rate_hz: f64,
    /// Control-step budget per skill.
    pub step_budget: usize,
    /// Quasi-static joint admittance of the simulated arm, rad/(N·m).
    pub joint_compliance: f64,
    /// Joint-space stiffness of pose tracking under impedance control, N·m/rad.
    pub tracking_stiffness: f64,
    /// Jacobian condition number above which torques are clamped.
    pub condition_cap: f64,
    /// Per-joint torque clamp, N·m.
    pub torque_clamp: f64,
    /// Control steps per demonstration frame when replaying trajectories.
    pub steps_per_frame: usize,
    pub link_lengths: [f64; 3],
}

impl Default for ExecutionParams {
    fn default() -> Self {
        crate::config::PipelineConfig::default().execution
    }
}

impl ExecutionParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("min_contact_force", self.min_contact_force),
            ("force_band", self.force_band),
            ("position_tolerance", self.position_tolerance),
            ("control_rate_hz", self.control_rate_hz),
            ("joint_compliance", self.joint_compliance),
            ("tracking_stiffness", self.tracking_stiffness),
            ("condition_cap", self.condition_cap),
            ("torque_clamp", self.torque_clamp),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("execution.{name} must be finite and > 0"));
            }
        }
        if !(self.contact_margin >= 0.0 && self.contact_margin <= self.force_band) {
            return Err("execution.contact_margin must lie in [0, force_band]".into());
        }
        if !(self.approach_clearance >= 0.0) {
            return Err("execution.approach_clearance must be >= 0".into());
        }
        if self.settle_steps == 0 || self.step_budget == 0 || self.steps_per_frame == 0 {
            return Err("execution.settle_steps, step_budget and steps_per_frame must be >= 1".into());
        }
        if !self.link_lengths.iter().all(|l| *l > 0.0 && l.is_finite()) {
            return Err("execution.link_lengths must be positive".into());
        }
        Ok(())
    }

    pub fn torque_limits(&self) -> TorqueLimits {
        TorqueLimits { condition_cap: self.condition_cap, torque_clamp: self.torque_clamp }
    }
}
