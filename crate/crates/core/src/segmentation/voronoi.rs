// SPDX-License-Identifier: Apache-2.0

use crate::geometry::{Aabb, Vec3};
use crate::trace::{Frame, ObjectId};

/// Workspace split into nearest-centroid cells. Points equidistant from
/// several seeds belong to the lowest object id.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiPartition {
    seeds: Vec<(ObjectId, Vec3)>,
    workspace: Aabb,
}

impl VoronoiPartition {
    pub fn new(mut seeds: Vec<(ObjectId, Vec3)>, workspace: Aabb) -> Option<Self> {
        if seeds.is_empty() {
            return None;
        }
        seeds.sort_by_key(|(id, _)| *id);
        Some(Self { seeds, workspace })
    }

    pub fn seeds(&self) -> &[(ObjectId, Vec3)] {
        &self.seeds
    }

    pub fn workspace(&self) -> &Aabb {
        &self.workspace
    }

    /// Owner of `p`. Total: points outside the workspace still get the nearest seed.
    pub fn owner(&self, p: &Vec3) -> ObjectId {
        let mut best = self.seeds[0].0;
        let mut best_d = (self.seeds[0].1 - p).norm_squared();
        // Seeds are id-sorted, so strict `<` keeps the lowest id on ties.
        for (id, c) in &self.seeds[1..] {
            let d = (c - p).norm_squared();
            if d < best_d {
                best = *id;
                best_d = d;
            }
        }
        best
    }
}

/// Partition seeded by the object centroids of `frame`. `None` when the frame has no objects.
pub fn partition_workspace(frame: &Frame, workspace: &Aabb) -> Option<VoronoiPartition> {
    VoronoiPartition::new(frame.objects.iter().map(|o| (o.object_id, o.centroid)).collect(), *workspace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ws() -> Aabb {
        Aabb::new([-1.0; 3], [2.0; 3])
    }

    #[test]
    fn single_seed_owns_everything() {
        let p = VoronoiPartition::new(vec![(4, Vec3::new(0.3, 0.2, 0.1))], ws()).unwrap();
        for q in [Vec3::zeros(), Vec3::new(1.9, -0.9, 1.0), Vec3::new(5.0, 5.0, 5.0)] {
            assert_eq!(p.owner(&q), 4);
        }
    }

    #[test]
    fn nearer_seed_wins() {
        let p = VoronoiPartition::new(vec![(1, Vec3::zeros()), (2, Vec3::new(1.0, 0.0, 0.0))], ws()).unwrap();
        assert_eq!(p.owner(&Vec3::new(0.2, 0.0, 0.0)), 1);
        assert_eq!(p.owner(&Vec3::new(0.7, 0.0, 0.0)), 2);
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let p = VoronoiPartition::new(vec![(9, Vec3::new(1.0, 0.0, 0.0)), (3, Vec3::zeros())], ws()).unwrap();
        assert_eq!(p.owner(&Vec3::new(0.5, 0.7, 0.0)), 3);
    }

    #[test]
    fn empty_rejected() {
        assert!(VoronoiPartition::new(vec![], ws()).is_none());
    }

    #[test]
    fn brute_force_agreement() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let seeds: Vec<(ObjectId, Vec3)> = (0..5)
            .map(|i| (i, Vec3::new(rng.random(), rng.random(), rng.random())))
            .collect();
        let p = VoronoiPartition::new(seeds.clone(), ws()).unwrap();
        for _ in 0..1000 {
            let q = Vec3::new(rng.random(), rng.random(), rng.random());
            let brute = seeds
                .iter()
                .map(|(id, c)| ((c - q).norm_squared(), *id))
                .min_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap()
                .1;
            assert_eq!(p.owner(&q), brute);
        }
    }
}
