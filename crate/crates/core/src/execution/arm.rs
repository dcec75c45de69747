// SPDX-License-Identifier: Apache-2.0

//! Planar three-link arm working in the vertical x–z plane.
//!
//! Task coordinates are `(x, z, φ)`: the tool-tip position in the plane and
//! the tool orientation `φ = θ1 + θ2 + θ3`, measured from +x. The base sits at
//! the origin; the working plane is `y = plane_y` in world coordinates.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

/// Tool orientation for top-down work: pointing straight down.
pub const TOOL_DOWN: f64 = -std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub links: [f64; 3],
    pub plane_y: f64,
}

impl ArmModel {
    pub fn new(links: [f64; 3]) -> Self {
        Self { links, plane_y: 0.0 }
    }

    /// Forward kinematics to task coordinates `(x, z, φ)`.
    pub fn forward(&self, theta: &Vector3<f64>) -> Vector3<f64> {
        let [l1, l2, l3] = self.links;
        let (a1, a2, a3) = (theta[0], theta[0] + theta[1], theta[0] + theta[1] + theta[2]);
        Vector3::new(
            l1 * a1.cos() + l2 * a2.cos() + l3 * a3.cos(),
            l1 * a1.sin() + l2 * a2.sin() + l3 * a3.sin(),
            a3,
        )
    }

    /// Tool-tip position in world coordinates.
    pub fn tip(&self, theta: &Vector3<f64>) -> Vec3 {
        let t = self.forward(theta);
        Vec3::new(t[0], self.plane_y, t[1])
    }

    /// Analytic Jacobian of [`forward`](Self::forward).
    pub fn jacobian(&self, theta: &Vector3<f64>) -> Matrix3<f64> {
        let [l1, l2, l3] = self.links;
        let (a1, a2, a3) = (theta[0], theta[0] + theta[1], theta[0] + theta[1] + theta[2]);
        let (s1, s2, s3) = (l1 * a1.sin(), l2 * a2.sin(), l3 * a3.sin());
        let (c1, c2, c3) = (l1 * a1.cos(), l2 * a2.cos(), l3 * a3.cos());
        Matrix3::new(
            -(s1 + s2 + s3), -(s2 + s3), -s3, //
            c1 + c2 + c3, c2 + c3, c3, //
            1.0, 1.0, 1.0,
        )
    }

    /// Ratio of largest to smallest singular value of the Jacobian.
    pub fn condition_number(&self, theta: &Vector3<f64>) -> f64 {
        let sv = self.jacobian(theta).singular_values();
        let (max, min) = (sv.max(), sv.min());
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Closed-form inverse kinematics on the elbow-up branch (`θ2 ≤ 0`).
    /// Returns `None` when the wrist point is out of reach.
    pub fn inverse(&self, task: &Vector3<f64>) -> Option<Vector3<f64>> {
        let [l1, l2, l3] = self.links;
        let phi = task[2];
        let wx = task[0] - l3 * phi.cos();
        let wz = task[1] - l3 * phi.sin();
        let d = (wx * wx + wz * wz - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if !d.is_finite() || d.abs() > 1.0 {
            return None;
        }
        let t2 = -d.acos();
        let t1 = wz.atan2(wx) - (l2 * t2.sin()).atan2(l1 + l2 * t2.cos());
        Some(Vector3::new(t1, t2, phi - t1 - t2))
    }

    /// Joint angles placing the tool tip at world point `p`, tool pointing down.
    pub fn inverse_tip(&self, p: &Vec3) -> Option<Vector3<f64>> {
        self.inverse(&Vector3::new(p.x, p.z, TOOL_DOWN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arm() -> ArmModel {
        ArmModel::new([0.35, 0.3, 0.1])
    }

    #[test]
    fn straight_out_pose() {
        let t = arm().forward(&Vector3::zeros());
        assert!((t - Vector3::new(0.75, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_link_transpose_product() {
        // With l3 = 0 the arm is a textbook two-link arm. Straight out,
        // J = [[0, 0], [l1 + l2, l2]] on (x, z), so J^T (0, F) = F (l1 + l2, l2).
        let a = ArmModel::new([0.4, 0.25, 0.0]);
        let tau = a.jacobian(&Vector3::zeros()).transpose() * Vector3::new(0.0, 2.0, 0.0);
        assert!((tau - Vector3::new(2.0 * 0.65, 2.0 * 0.25, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn ik_round_trips(x in 0.2..0.5f64, z in 0.0..0.3f64) {
            let a = arm();
            let th = a.inverse_tip(&Vec3::new(x, 0.0, z)).unwrap();
            prop_assert!(th[1] <= 0.0);
            let p = a.tip(&th);
            prop_assert!((p - Vec3::new(x, 0.0, z)).norm() < 1e-12);
            prop_assert!((a.forward(&th)[2] - TOOL_DOWN).abs() < 1e-12);
        }

        #[test]
        fn jacobian_matches_central_differences(t in proptest::array::uniform3(-3.0..3.0f64)) {
            let a = arm();
            let th = Vector3::from(t);
            let j = a.jacobian(&th);
            let h = 1e-6;
            for c in 0..3 {
                let mut e = Vector3::zeros();
                e[c] = h;
                let d = (a.forward(&(th + e)) - a.forward(&(th - e))) / (2.0 * h);
                for r in 0..3 {
                    prop_assert!((d[r] - j[(r, c)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn unreachable_is_none() {
        assert!(arm().inverse_tip(&Vec3::new(2.0, 0.0, 0.0)).is_none());
    }
}
