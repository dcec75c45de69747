// SPDX-License-Identifier: Apache-2.0

//! The two control laws every skill is built from.
//!
//! Positional: `x_{t+1} = x_t + k1 (f + k2 ḟ)`.
//! Impedance:  `τ = Jᵀ F_d + K1 (f + K2 ḟ)`.
//!
//! `ḟ` is the backward difference of `f` over one control step (zero on the
//! first step).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::ExecutionError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    /// Positional proportional gain.
    pub k1: f64,
    /// Positional derivative gain.
    pub k2: f64,
    /// Impedance proportional gain.
    pub impedance_k1: f64,
    /// Impedance derivative gain.
    pub impedance_k2: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        crate::config::PipelineConfig::default().gains
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("impedance_k1", self.impedance_k1),
            ("impedance_k2", self.impedance_k2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("gains.{name} must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Positional update. `f_prev` is the previous step's feedback, if any.
pub fn positional_step(x_t: &Vec3, f: &Vec3, f_prev: Option<&Vec3>, gains: &ControllerGains) -> Result<Vec3, ExecutionError> {
    if !f.iter().all(|v| v.is_finite()) {
        return Err(ExecutionError::NonFinite(format!("positional feedback {f:?}")));
    }
    let f_dot = f_prev.map_or_else(Vec3::zeros, |p| f - p);
    Ok(x_t + gains.k1 * (f + gains.k2 * f_dot))
}

/// Safety limits applied to impedance torques.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueLimits {
    pub condition_cap: f64,
    pub torque_clamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceOutput {
    pub torque: Vector3<f64>,
    /// True when the Jacobian was near-singular and the torque was clamped.
    pub clamped: bool,
}

/// Impedance law. `f` is the joint-space feedback; `desired_force` is the
/// end-effector wrench in task coordinates `(F_x, F_z, M_φ)`.
pub fn impedance_step(
    jacobian: &Matrix3<f64>,
    desired_force: &Vector3<f64>,
    f: &Vector3<f64>,
    f_prev: Option<&Vector3<f64>>,
    gains: &ControllerGains,
    limits: &TorqueLimits,
) -> Result<ImpedanceOutput, ExecutionError> {
    if !f.iter().all(|v| v.is_finite()) {
        return Err(ExecutionError::NonFinite(format!("impedance feedback {f:?}")));
    }
    let f_dot = f_prev.map_or_else(Vector3::zeros, |p| f - p);
    let mut torque = jacobian.transpose() * desired_force + gains.impedance_k1 * (f + gains.impedance_k2 * f_dot);
    let sv = jacobian.singular_values();
    let cond = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    let clamped = cond > limits.condition_cap;
    if clamped {
        torque = torque.map(|t| t.clamp(-limits.torque_clamp, limits.torque_clamp));
    }
    Ok(ImpedanceOutput { torque, clamped })
}

/// MoveToContact feedback: sensed normal force minus the desired contact force.
pub fn feedback_move_to_contact(normal_force: f64, desired_force: f64) -> f64 {
    normal_force - desired_force
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::ArmModel;
    use proptest::prelude::*;

    fn gains(k1: f64, k2: f64) -> ControllerGains {
        ControllerGains { k1, k2, impedance_k1: 5.0, impedance_k2: 0.1 }
    }

    fn limits() -> TorqueLimits {
        TorqueLimits { condition_cap: 1e4, torque_clamp: 50.0 }
    }

    #[test]
    fn zero_feedback_is_a_fixed_point() {
        let x = Vec3::new(0.3, 0.0, 0.2);
        assert_eq!(positional_step(&x, &Vec3::zeros(), None, &gains(0.2, 0.1)).unwrap(), x);
    }

    #[test]
    fn unit_gain_reaches_goal_in_one_step() {
        let (x, xd) = (Vec3::new(0.3, 0.0, 0.2), Vec3::new(0.5, 0.0, 0.1));
        let next = positional_step(&x, &(xd - x), None, &gains(1.0, 0.0)).unwrap();
        assert!((next - xd).norm() < 1e-15);
    }

    #[test]
    fn matches_scalar_recursion() {
        // Independent scalar recursion on each axis.
        let (k1, k2) = (0.2, 0.1);
        let xd = Vec3::new(0.5, 0.0, 0.1);
        let mut x = Vec3::new(0.2, 0.0, 0.3);
        let mut prev: Option<Vec3> = None;
        let mut s = [0.2, 0.0, 0.3];
        let mut s_prev_f: Option<[f64; 3]> = None;
        for _ in 0..20 {
            let f = xd - x;
            x = positional_step(&x, &f, prev.as_ref(), &gains(k1, k2)).unwrap();
            prev = Some(f);
            let mut fs = [0.0; 3];
            for a in 0..3 {
                fs[a] = [0.5, 0.0, 0.1][a] - s[a];
                let d = s_prev_f.map_or(0.0, |p| fs[a] - p[a]);
                s[a] += k1 * (fs[a] + k2 * d);
            }
            s_prev_f = Some(fs);
            for a in 0..3 {
                assert!((x[a] - s[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_feedback_aborts() {
        let x = Vec3::zeros();
        assert!(positional_step(&x, &Vec3::new(f64::NAN, 0.0, 0.0), None, &gains(0.2, 0.1)).is_err());
    }

    #[test]
    fn impedance_zero_inputs_give_zero_torque() {
        let j = ArmModel::new([0.35, 0.3, 0.1]).jacobian(&Vector3::new(0.5, -1.0, -1.0));
        let out = impedance_step(&j, &Vector3::zeros(), &Vector3::zeros(), None, &gains(0.2, 0.1), &limits()).unwrap();
        assert_eq!(out.torque, Vector3::zeros());
        assert!(!out.clamped);
    }

    #[test]
    fn singular_jacobian_clamps() {
        let j = ArmModel::new([0.35, 0.3, 0.1]).jacobian(&Vector3::zeros());
        let f = Vector3::new(1e3, -1e3, 0.0);
        let out = impedance_step(&j, &Vector3::zeros(), &f, None, &gains(0.2, 0.1), &limits()).unwrap();
        assert!(out.clamped);
        assert!(out.torque.iter().all(|t| t.abs() <= 50.0));
    }

    #[test]
    fn move_to_contact_feedback() {
        assert_eq!(feedback_move_to_contact(0.5, 0.5), 0.0);
        assert_eq!(feedback_move_to_contact(0.0, 0.5), -0.5);
        assert!((feedback_move_to_contact(0.8, 0.5) - 0.3).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn zero_gain_freezes(x in proptest::array::uniform3(-1.0..1.0f64), f in proptest::array::uniform3(-1.0..1.0f64)) {
            let x = Vec3::from(x);
            prop_assert_eq!(positional_step(&x, &Vec3::from(f), None, &gains(0.0, 0.1)).unwrap(), x);
        }
    }
}
