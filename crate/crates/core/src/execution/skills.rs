// SPDX-License-Identifier: Apache-2.0

//! Per-skill controller loops.
//!
//! Positional skills drive the tool tip with the positional law. Contact
//! skills run the impedance law on a quasi-static arm: each control step the
//! joints move by `C (τ + Jᵀ F_contact)`, where `C` is the joint compliance
//! and `F_contact` the spring reaction of the touched object. The impedance
//! feedback combines joint-space pose tracking (horizontal position and tool
//! orientation) with the normal-force error along the vertical task axis.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    feedback_move_to_contact, impedance_step, positional_step, ArmModel, ControllerGains, ExecutionError,
    ExecutionParams, TOOL_DOWN,
};
use crate::environment::{Environment, SimObject};
use crate::geometry::Vec3;
use crate::inference::{Policy, PolicyStep, SkillClass};
use crate::learning::ContactTrajectoryAction;

/// Contact-trajectory action per policy-step index.
pub type ActionBindings = BTreeMap<usize, ContactTrajectoryAction>;

/// The simulated arm and its current joint configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    arm: ArmModel,
    theta: Vector3<f64>,
}

impl Robot {
    /// Places the arm with its tool tip at `tip`, tool pointing down.
    pub fn at_tip(arm: ArmModel, tip: &Vec3) -> Result<Self, ExecutionError> {
        let theta = arm.inverse_tip(tip).ok_or(ExecutionError::Unreachable([tip.x, tip.y, tip.z]))?;
        Ok(Self { arm, theta })
    }

    pub fn arm(&self) -> &ArmModel {
        &self.arm
    }

    pub fn theta(&self) -> &Vector3<f64> {
        &self.theta
    }

    pub fn tip(&self) -> Vec3 {
        self.arm.tip(&self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillOutcome {
    pub class: SkillClass,
    /// True iff the detected final state equals the step's goal state and the
    /// controller reached its own completion condition.
    pub success: bool,
    pub final_state: String,
    /// Sensed normal force at every control step, N.
    pub force_log: Vec<f64>,
    /// Tool-tip position at every control step.
    pub pose_log: Vec<Vec3>,
    pub steps_used: usize,
    /// Why the controller stopped short, if it did.
    pub reason: Option<String>,
    /// Steps whose torque was clamped near a singularity.
    pub clamped_steps: usize,
    /// Contact-trajectory target force, if the skill used one.
    pub target_force: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillExecutor {
    pub gains: ControllerGains,
    pub params: ExecutionParams,
}

struct Run<'a> {
    exec: &'a SkillExecutor,
    env: &'a mut Environment,
    robot: &'a mut Robot,
    force_log: Vec<f64>,
    pose_log: Vec<Vec3>,
    steps: usize,
    clamped: usize,
    prev_impedance_f: Option<Vector3<f64>>,
}

/// Outcome of a controller phase that did not complete.
type Stop = String;

impl Run<'_> {
    fn budget_left(&self) -> bool {
        self.steps < self.exec.params.step_budget
    }

    fn positional_to(&mut self, target: &Vec3) -> Result<Result<(), Stop>, ExecutionError> {
        let p = &self.exec.params;
        let mut prev: Option<Vec3> = None;
        loop {
            let x = self.robot.tip();
            let f = target - x;
            if f.norm() < p.position_tolerance {
                return Ok(Ok(()));
            }
            if !self.budget_left() {
                return Ok(Err(format!("step budget {} exhausted", p.step_budget)));
            }
            let next = match positional_step(&x, &f, prev.as_ref(), &self.exec.gains) {
                Ok(n) => n,
                Err(e) => return Ok(Err(e.to_string())),
            };
            prev = Some(f);
            let Some(theta) = self.robot.arm.inverse_tip(&next) else {
                return Ok(Err(format!("inverse kinematics failed for {:?}", [next.x, next.y, next.z])));
            };
            self.robot.theta = theta;
            let tip = self.robot.tip();
            self.force_log.push(self.env.contact_force(&tip));
            self.pose_log.push(tip);
            self.steps += 1;
        }
    }

    /// One impedance step regulating force `f_cmd` while tracking horizontal
    /// position `x_des`. Returns (sensed, true) normal force before the step.
    fn force_step(&mut self, x_des: f64, f_cmd: f64) -> Result<(f64, f64), Stop> {
        let p = &self.exec.params;
        let tip = self.robot.tip();
        let sensed = self.env.contact_force(&tip);
        let actual = self.env.last_contact().normal_force;
        let arm = self.robot.arm;
        let Some(theta_d) = arm.inverse(&Vector3::new(x_des, tip.z, TOOL_DOWN)) else {
            return Err(format!("inverse kinematics failed for x = {x_des}"));
        };
        let theta = self.robot.theta;
        let j = arm.jacobian(&theta);
        let f = p.tracking_stiffness * (theta_d - theta)
            + j.transpose() * Vector3::new(0.0, feedback_move_to_contact(sensed, f_cmd), 0.0);
        let desired = Vector3::new(0.0, -f_cmd, 0.0);
        let out = impedance_step(&j, &desired, &f, self.prev_impedance_f.as_ref(), &self.exec.gains, &p.torque_limits())
            .map_err(|e| e.to_string())?;
        self.prev_impedance_f = Some(f);
        if out.clamped {
            self.clamped += 1;
        }
        let reaction = j.transpose() * Vector3::new(0.0, actual, 0.0);
        self.robot.theta += p.joint_compliance * (out.torque + reaction);
        self.force_log.push(sensed);
        self.pose_log.push(tip);
        self.steps += 1;
        Ok((sensed, actual))
    }

    /// Regulates until the mean of the last `settle_steps` sensed forces, all
    /// taken in contact, satisfies `accept`.
    fn regulate(&mut self, x_des: f64, f_cmd: f64, accept: impl Fn(f64) -> bool) -> Result<(), Stop> {
        let n = self.exec.params.settle_steps;
        let mut window: VecDeque<(f64, f64)> = VecDeque::with_capacity(n + 1);
        while self.budget_left() {
            window.push_back(self.force_step(x_des, f_cmd)?);
            if window.len() > n {
                window.pop_front();
            }
            if window.len() == n && window.iter().all(|w| w.1 > 0.0) {
                let mean = window.iter().map(|w| w.0).sum::<f64>() / n as f64;
                if accept(mean) {
                    return Ok(());
                }
            }
        }
        Err(format!("force did not settle within {} steps", self.exec.params.step_budget))
    }

    fn move_to_contact(&mut self, x_des: f64) -> Result<(), Stop> {
        let p = &self.exec.params;
        let (lo, hi) = (p.min_contact_force, p.min_contact_force + p.force_band);
        self.regulate(x_des, p.min_contact_force + p.contact_margin, |m| m >= lo && m <= hi)
    }

    /// Presses to `force`, then sweeps the horizontal waypoints `xs` while
    /// regulating it. Returns the swept tip path and true forces.
    fn contact_trajectory(&mut self, xs: &[f64], force: f64) -> Result<(Vec<Vec3>, Vec<f64>), Stop> {
        let p = self.exec.params.clone();
        self.regulate(xs[0], force, |m| (m - force).abs() <= p.force_band / 2.0)?;
        for _ in 0..p.settle_steps {
            self.force_step(xs[0], force)?;
        }
        let (mut path, mut forces) = (Vec::new(), Vec::new());
        for w in xs.windows(2) {
            for s in 1..=p.steps_per_frame {
                if !self.budget_left() {
                    return Err(format!("step budget {} exhausted mid-trajectory", p.step_budget));
                }
                let x = w[0] + (w[1] - w[0]) * s as f64 / p.steps_per_frame as f64;
                path.push(self.robot.tip());
                forces.push(self.force_step(x, force)?.1);
            }
        }
        Ok((path, forces))
    }
}

impl SkillExecutor {
    pub fn new(gains: ControllerGains, params: ExecutionParams) -> Self {
        Self { gains, params }
    }

    pub fn arm(&self) -> ArmModel {
        ArmModel::new(self.params.link_lengths)
    }

    /// Runs one policy step until its completion condition or the step budget.
    pub fn execute_skill(
        &self,
        step: &PolicyStep,
        action: Option<&ContactTrajectoryAction>,
        env: &mut Environment,
        robot: &mut Robot,
    ) -> Result<SkillOutcome, ExecutionError> {
        let obj: SimObject = env.object(step.object_id)?.clone();
        let rel = &step.segment.relative;
        let target_x = |r: Option<&Vec3>| r.map_or(robot.tip().x, |r| obj.center.x + r.x);
        let end_x = target_x(rel.last());
        let clear = obj.top() + self.params.approach_clearance;
        let mut run = Run {
            exec: self,
            env,
            robot,
            force_log: Vec::new(),
            pose_log: Vec::new(),
            steps: 0,
            clamped: 0,
            prev_impedance_f: None,
        };
        let mut target_force = None;
        let stop: Result<(), Stop> = match step.class {
            SkillClass::MoveToContact | SkillClass::GuardedMove | SkillClass::Grasp => run.move_to_contact(end_x),
            SkillClass::MoveWithContact => {
                let action = action.ok_or(ExecutionError::MissingAction { step: 0, class: step.class })?;
                target_force = Some(action.target_force);
                let base = if action.base_trajectory.is_empty() { rel } else { &action.base_trajectory };
                let xs: Vec<f64> = if base.is_empty() {
                    vec![run.robot.tip().x; 2]
                } else {
                    base.iter().map(|r| obj.center.x + r.x).collect()
                };
                match run.contact_trajectory(&xs, action.target_force) {
                    Ok((path, forces)) => {
                        run.env.apply_peel(obj.id, &path, &forces)?;
                        Ok(())
                    }
                    Err(e) => Err(e),
                }
            }
            SkillClass::Approach => run.positional_to(&Vec3::new(end_x, run.robot.arm.plane_y, clear))?,
            _ => {
                let z = rel.last().map_or(clear, |r| (obj.center.z + r.z).max(clear));
                run.positional_to(&Vec3::new(end_x, run.robot.arm.plane_y, z))?
            }
        };
        let final_state = run.env.detect_state(obj.id)?.to_string();
        let success = stop.is_ok() && final_state == step.goal_state;
        Ok(SkillOutcome {
            class: step.class,
            success,
            reason: match stop {
                Err(s) => Some(s),
                Ok(()) if !success => Some(format!("reached {final_state}, goal {}", step.goal_state)),
                Ok(()) => None,
            },
            final_state,
            force_log: run.force_log,
            pose_log: run.pose_log,
            steps_used: run.steps,
            clamped_steps: run.clamped,
            target_force,
        })
    }

    /// Runs the policy in order, halting after the first failed step.
    pub fn execute_policy(
        &self,
        policy: &Policy,
        env: &mut Environment,
        robot: &mut Robot,
        bindings: &ActionBindings,
    ) -> Result<Vec<SkillOutcome>, ExecutionError> {
        let mut outcomes = Vec::with_capacity(policy.len());
        for (i, step) in policy.steps.iter().enumerate() {
            let action = bindings.get(&i);
            if step.class == SkillClass::MoveWithContact && action.is_none() {
                return Err(ExecutionError::MissingAction { step: i, class: step.class });
            }
            let outcome = self.execute_skill(step, action, env, robot)?;
            let ok = outcome.success;
            outcomes.push(outcome);
            if !ok {
                break;
            }
        }
        Ok(outcomes)
    }
}

/// Free-function form of [`SkillExecutor::execute_skill`].
pub fn execute_skill(
    step: &PolicyStep,
    action: Option<&ContactTrajectoryAction>,
    env: &mut Environment,
    robot: &mut Robot,
    gains: &ControllerGains,
    params: &ExecutionParams,
) -> Result<SkillOutcome, ExecutionError> {
    SkillExecutor::new(*gains, params.clone()).execute_skill(step, action, env, robot)
}

/// Free-function form of [`SkillExecutor::execute_policy`].
pub fn execute_policy(
    policy: &Policy,
    env: &mut Environment,
    robot: &mut Robot,
    bindings: &ActionBindings,
    gains: &ControllerGains,
    params: &ExecutionParams,
) -> Result<Vec<SkillOutcome>, ExecutionError> {
    SkillExecutor::new(*gains, params.clone()).execute_policy(policy, env, robot, bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{EnvironmentParams, PEELED, UNPEELED};
    use crate::inference::StepSegment;

    fn cucumber_env(stiffness: f64, noise: bool) -> Environment {
        let o = SimObject::new(1, "cucumber", Vec3::new(0.45, 0.0, 0.02), Vec3::new(0.2, 0.04, 0.04), stiffness, 1.5, 0.15);
        Environment::new(vec![o], EnvironmentParams::default(), noise, 5)
    }

    fn step(class: SkillClass, goal: &str, relative: Vec<Vec3>) -> PolicyStep {
        PolicyStep {
            class,
            goal_state: goal.into(),
            start_state: UNPEELED.into(),
            object_id: 1,
            object_class: "cucumber".into(),
            segment: StepSegment { start_frame: 0, end_frame: 1, relative, synthetic: false },
        }
    }

    fn stroke() -> Vec<Vec3> {
        (0..=60).map(|i| Vec3::new(-0.08 + 0.16 * i as f64 / 60.0, 0.0, 0.07)).collect()
    }

    fn peel_policy() -> Policy {
        Policy {
            steps: vec![
                step(SkillClass::Approach, UNPEELED, vec![Vec3::new(-0.08, 0.0, 0.05)]),
                step(SkillClass::MoveToContact, UNPEELED, vec![Vec3::new(-0.08, 0.0, 0.05)]),
                step(SkillClass::MoveWithContact, PEELED, stroke()),
            ],
        }
    }

    fn exec() -> SkillExecutor {
        SkillExecutor::new(ControllerGains::default(), ExecutionParams::default())
    }

    fn robot() -> Robot {
        Robot::at_tip(ArmModel::new([0.35, 0.3, 0.1]), &Vec3::new(0.15, 0.0, 0.30)).unwrap()
    }

    fn bindings(force: f64) -> ActionBindings {
        BTreeMap::from([(2, ContactTrajectoryAction { action_id: 0, base_trajectory: Vec::new(), target_force: force })])
    }

    #[test]
    fn approach_reaches_hover_point() {
        let (mut env, mut r) = (cucumber_env(500.0, false), robot());
        let out = exec().execute_skill(&peel_policy().steps[0], None, &mut env, &mut r).unwrap();
        assert!(out.success, "{:?}", out.reason);
        assert!((r.tip() - Vec3::new(0.37, 0.0, 0.045)).norm() < 1e-3);
    }

    #[test]
    fn move_to_contact_settles_in_band_for_every_stiffness() {
        for k in [450.0, 500.0, 1900.0, 2100.0] {
            let (mut env, mut r) = (cucumber_env(k, false), robot());
            let e = exec();
            let p = peel_policy();
            e.execute_skill(&p.steps[0], None, &mut env, &mut r).unwrap();
            let out = e.execute_skill(&p.steps[1], None, &mut env, &mut r).unwrap();
            assert!(out.success, "k={k}: {:?}", out.reason);
            let f = *out.force_log.last().unwrap();
            assert!((0.5..=0.7).contains(&f), "k={k}: {f}");
            // Keep pressing: the steady state stays in the band.
            let mut run = Run { exec: &e, env: &mut env, robot: &mut r, force_log: vec![], pose_log: vec![], steps: 0, clamped: 0, prev_impedance_f: None };
            for _ in 0..300 {
                run.force_step(0.37, 0.6).unwrap();
            }
            let f = *run.force_log.last().unwrap();
            assert!((f - 0.6).abs() < 1e-3, "k={k}: {f}");
        }
    }

    #[test]
    fn weak_stroke_does_not_peel() {
        let (mut env, mut r) = (cucumber_env(500.0, false), robot());
        let out = exec().execute_policy(&peel_policy(), &mut env, &mut r, &bindings(0.5)).unwrap();
        assert_eq!(out.iter().map(|o| o.success).collect::<Vec<_>>(), [true, true, false]);
        assert_eq!(out[2].final_state, UNPEELED);
        assert_eq!(env.object(1).unwrap().peel_map(), 0.0);
    }

    #[test]
    fn strong_stroke_peels() {
        let (mut env, mut r) = (cucumber_env(500.0, false), robot());
        let out = exec().execute_policy(&peel_policy(), &mut env, &mut r, &bindings(1.7)).unwrap();
        assert!(out.iter().all(|o| o.success), "{:?}", out.iter().map(|o| &o.reason).collect::<Vec<_>>());
        assert_eq!(env.detect_state(1).unwrap(), PEELED);
    }

    #[test]
    fn missing_action_is_an_error() {
        let (mut env, mut r) = (cucumber_env(500.0, false), robot());
        let err = exec().execute_policy(&peel_policy(), &mut env, &mut r, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, ExecutionError::MissingAction { step: 2, .. }));
    }

    #[test]
    fn empty_policy_runs_nothing() {
        let (mut env, mut r) = (cucumber_env(500.0, false), robot());
        assert!(exec().execute_policy(&Policy::default(), &mut env, &mut r, &BTreeMap::new()).unwrap().is_empty());
    }
}
