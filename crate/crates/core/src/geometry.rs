// SPDX-License-Identifier: Apache-2.0

//! Small 3-D geometry helpers shared by the contact model and the simulator.

use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned box, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    /// Box centered on `center` with full side lengths `extent`.
    pub fn from_center_extent(center: &Vec3, extent: &Vec3) -> Self {
        let h = extent * 0.5;
        Self {
            min: [center.x - h.x, center.y - h.y, center.z - h.z],
            max: [center.x + h.x, center.y + h.y, center.z + h.z],
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }

    pub fn half_extent(&self) -> Vec3 {
        Vec3::new(
            0.5 * (self.max[0] - self.min[0]),
            0.5 * (self.max[1] - self.min[1]),
            0.5 * (self.max[2] - self.min[2]),
        )
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|k| self.min[k].is_finite() && self.max[k].is_finite() && self.min[k] <= self.max[k])
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance_to_point(&self, p: &Vec3) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            let d = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Surface-to-surface gap between two boxes (0 when they touch or overlap).
    pub fn distance_to_box(&self, other: &Aabb) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            let gap = (other.min[k] - self.max[k]).max(self.min[k] - other.max[k]).max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] < other.max[k] && other.min[k] < self.max[k])
    }

    /// Minimum distance between the segment `a`–`b` and the box.
    ///
    /// Along the segment the squared distance is a piecewise quadratic whose
    /// pieces change only where a coordinate crosses a slab plane, so the
    /// minimum is found exactly by minimizing each piece in closed form.
    pub fn distance_to_segment(&self, a: &Vec3, b: &Vec3) -> f64 {
        let d = b - a;
        let mut breaks = vec![0.0, 1.0];
        for k in 0..3 {
            if d[k] != 0.0 {
                for plane in [self.min[k], self.max[k]] {
                    let t = (plane - a[k]) / d[k];
                    if t > 0.0 && t < 1.0 {
                        breaks.push(t);
                    }
                }
            }
        }
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());

        let mut best = f64::INFINITY;
        for w in breaks.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let mid = 0.5 * (t0 + t1);
            // Quadratic coefficients of the squared distance on this piece.
            let (mut qa, mut qb) = (0.0, 0.0);
            for k in 0..3 {
                let pk = a[k] + mid * d[k];
                let bound = if pk < self.min[k] {
                    Some(self.min[k])
                } else if pk > self.max[k] {
                    Some(self.max[k])
                } else {
                    None
                };
                if let Some(bound) = bound {
                    let off = a[k] - bound;
                    qa += d[k] * d[k];
                    qb += 2.0 * d[k] * off;
                }
            }
            let t = if qa > 0.0 { (-qb / (2.0 * qa)).clamp(t0, t1) } else { t0 };
            best = best.min(self.distance_to_point(&(a + d * t)));
            best = best.min(self.distance_to_point(&(a + d * t0)));
        }
        best.min(self.distance_to_point(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Aabb {
        Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    }

    #[test]
    fn point_distance() {
        let b = unit();
        assert_eq!(b.distance_to_point(&Vec3::new(0.5, 0.5, 0.5)), 0.0);
        assert!((b.distance_to_point(&Vec3::new(2.0, 0.5, 0.5)) - 1.0).abs() < 1e-15);
        assert!((b.distance_to_point(&Vec3::new(2.0, 2.0, 0.5)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn box_gap() {
        let a = unit();
        let b = Aabb::new([1.5, 0.0, 0.0], [2.0, 1.0, 1.0]);
        assert!((a.distance_to_box(&b) - 0.5).abs() < 1e-15);
        let touching = Aabb::new([1.0, 0.0, 0.0], [2.0, 1.0, 1.0]);
        assert_eq!(a.distance_to_box(&touching), 0.0);
    }

    #[test]
    fn segment_passing_over_box() {
        let b = unit();
        let d = b.distance_to_segment(&Vec3::new(-1.0, 0.5, 1.2), &Vec3::new(2.0, 0.5, 1.2));
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn segment_sampling_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let b = Aabb::new([-0.1, -0.2, 0.0], [0.3, 0.1, 0.15]);
        for _ in 0..500 {
            let a = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let c = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = 20_000;
            let sampled = (0..=n)
                .map(|i| b.distance_to_point(&(a + (c - a) * (i as f64 / n as f64))))
                .fold(f64::INFINITY, f64::min);
            let exact = b.distance_to_segment(&a, &c);
            assert!(exact <= sampled + 1e-12);
            assert!(sampled - exact < 2e-4, "exact {exact} sampled {sampled}");
        }
    }
}
